"""Builders for every LP the toolkit solves.

Four relaxations over an instance or an arrival model:

* naive LP: drop integrality from the assignment ILP (variables x_ij).
* bundle LP: variables x_ijp tied to opened bundles; requires every item to
  be a pure P-item or N-item.  Variables are created only where they may be
  nonzero: x_pjp for each P-edge (p, j), and x_ijp for each N-edge (i, j)
  against each bundle (j, p).  Pinned-to-zero variables are omitted.
* budgeted bundle LP: bundle LP plus per-buyer and per-bundle budget rows
  for each configured resource.
* arrival-model LPs: the same bundle structure over item types, with
  right-hand sides q_i*T (online-feasible version, value V[ON]) or the
  inflated 2*ceil(q_i*T) / ceil(q_i*T*kappa) version bounding the ex-post
  optimum (value V[OFF]).

Variable order is always lexicographic by declared (item, buyer, p-item)
position, so solver output is deterministic.  Builders accept cost-mode
instances by using the excess v - rho*c wherever the plain mode uses v - rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Instance, to_fraction
from .errors import (
    AmbiguousInstance,
    DomainError,
    GammaViolated,
    MissingBudgets,
)
from .lp import LinearProgram, LpSolution, solve_lp


@dataclass(frozen=True)
class IidModel:
    """Known distribution over item types with T i.i.d. arrivals.

    probs must sum to 1 exactly.  costs is only populated by the structural
    hardness generator; the online rounding algorithms require plain mode.
    """

    types: tuple
    buyers: tuple
    values: dict
    thresholds: dict
    probs: dict
    horizon: int
    costs: dict | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "buyers", tuple(self.buyers))
        object.__setattr__(self, "values", {k: to_fraction(v) for k, v in self.values.items()})
        object.__setattr__(
            self, "thresholds", {k: to_fraction(v) for k, v in self.thresholds.items()}
        )
        object.__setattr__(self, "probs", {k: to_fraction(v) for k, v in self.probs.items()})
        if self.costs is not None:
            object.__setattr__(self, "costs", {k: to_fraction(v) for k, v in self.costs.items()})
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if set(self.probs) != set(self.types):
            raise ValueError("probs must cover exactly the declared types")
        if any(q < 0 for q in self.probs.values()):
            raise ValueError("negative arrival probability")
        if sum(self.probs.values()) != 1:
            raise ValueError("arrival probabilities must sum to 1 exactly")
        for (i, j) in self.values:
            if i not in set(self.types) or j not in set(self.buyers):
                raise ValueError(f"value for unknown pair ({i!r}, {j!r})")
        for j in self.buyers:
            if self.thresholds.get(j, Fraction(0)) <= 0:
                raise ValueError(f"buyer {j!r} needs a positive threshold")

    def cost(self, i, j) -> Fraction:
        if self.costs is None:
            return Fraction(1)
        return self.costs.get((i, j), Fraction(1))

    def excess(self, i, j) -> Fraction:
        return self.values[(i, j)] - self.thresholds[j] * self.cost(i, j)

    def is_p_edge_type(self, i, j) -> bool:
        return (i, j) in self.values and self.excess(i, j) >= 0

    def p_edge_types(self):
        """P-edge types in canonical (type order, buyer order)."""
        return [
            (p, j)
            for p in self.types
            for j in self.buyers
            if self.is_p_edge_type(p, j)
        ]

    def n_edge_types(self):
        return [
            (i, j)
            for i in self.types
            for j in self.buyers
            if (i, j) in self.values and not self.is_p_edge_type(i, j)
        ]


@dataclass
class BundleLpSolution:
    """Bundle-variable solution: x maps (item, buyer, p_item) to a value."""

    x: dict
    objective: object

    @classmethod
    def from_lp(cls, lp: LinearProgram, sol: LpSolution) -> "BundleLpSolution":
        obj = sol.exact_objective if sol.exact_objective is not None else sol.objective
        return cls(x=sol.value_map(lp), objective=obj)


# ---------------------------------------------------------------------------


def build_naive_lp(inst: Instance) -> LinearProgram:
    """Fractional relaxation of the assignment ILP; plain mode only."""
    if inst.has_costs:
        raise ValueError("naive LP is defined for plain (unit-cost) instances")
    edges = inst.edges()
    idx = {e: k for k, e in enumerate(edges)}
    n = len(edges)
    objective = [inst.values[e] for e in edges]
    rows = []
    for j in inst.buyers:
        coeffs = [Fraction(0)] * n
        touched = False
        for i in inst.items:
            if (i, j) in idx:
                coeffs[idx[(i, j)]] = inst.thresholds[j] - inst.values[(i, j)]
                touched = True
        if touched:
            rows.append((coeffs, "<=", Fraction(0)))
    for i in inst.items:
        coeffs = [Fraction(0)] * n
        touched = False
        for j in inst.buyers:
            if (i, j) in idx:
                coeffs[idx[(i, j)]] = Fraction(1)
                touched = True
        if touched:
            rows.append((coeffs, "<=", Fraction(1)))
    return LinearProgram(
        objective=objective,
        rows=rows,
        upper_bounds=[Fraction(1)] * n,
        names=[f"x[{i},{j}]" for i, j in edges],
        var_keys=list(edges),
    )


def _bundle_vars(inst: Instance):
    """Canonical variable list for the bundle LP of an unambiguous instance.

    Keys (i, j, p): the bundle opener when i == p, an N-edge member
    otherwise.  Bundles are the pairs (j, p) with (p, j) an edge of a
    P-item p.
    """
    if not inst.is_unambiguous():
        raise AmbiguousInstance(
            f"ambiguous items: {inst.ambiguous_items()}"
        )
    p_items = set(inst.p_items())
    bundles = [
        (j, p)
        for p in inst.items
        if p in p_items
        for j in inst.buyers
        if (p, j) in inst.values
    ]
    keys = []
    for i in inst.items:
        for j in inst.buyers:
            if (i, j) not in inst.values:
                continue
            if i in p_items:
                keys.append((i, j, i))
            else:
                for (jj, p) in bundles:
                    if jj == j:
                        keys.append((i, j, p))
    keys.sort(key=lambda k: (inst.item_index(k[0]), inst.buyer_index(k[1]), inst.item_index(k[2])))
    return keys, bundles


def _bundle_lp_core(inst: Instance):
    keys, bundles = _bundle_vars(inst)
    idx = {k: pos for pos, k in enumerate(keys)}
    n = len(keys)
    objective = [inst.values[(i, j)] for (i, j, _p) in keys]
    rows = []
    # per-bundle average-value rows: sum_i (rho_j c_ij - v_ij) x_ijp <= 0
    for (j, p) in sorted(bundles, key=lambda b: (inst.item_index(b[1]), inst.buyer_index(b[0]))):
        coeffs = [Fraction(0)] * n
        for (i, jj, pp), pos in idx.items():
            if jj == j and pp == p:
                coeffs[pos] = inst.thresholds[j] * inst.cost(i, j) - inst.values[(i, j)]
        rows.append((coeffs, "<=", Fraction(0)))
    # per-item rows: sum over all bundles <= 1
    for i in inst.items:
        coeffs = [Fraction(0)] * n
        touched = False
        for (ii, j, p), pos in idx.items():
            if ii == i:
                coeffs[pos] = Fraction(1)
                touched = True
        if touched:
            rows.append((coeffs, "<=", Fraction(1)))
    # membership rows: x_ijp <= x_pjp
    for (i, j, p), pos in sorted(idx.items(), key=lambda kv: kv[1]):
        if i == p:
            continue
        coeffs = [Fraction(0)] * n
        coeffs[pos] = Fraction(1)
        coeffs[idx[(p, j, p)]] = Fraction(-1)
        rows.append((coeffs, "<=", Fraction(0)))
    return keys, bundles, idx, objective, rows


def build_bundle_lp(inst: Instance) -> LinearProgram:
    """Bundle relaxation for an unambiguous instance."""
    keys, _bundles, _idx, objective, rows = _bundle_lp_core(inst)
    return LinearProgram(
        objective=objective,
        rows=rows,
        names=[f"x[{i},{j},{p}]" for i, j, p in keys],
        var_keys=keys,
    )


def build_bundle_lp_budgeted(inst: Instance) -> LinearProgram:
    """Bundle LP with per-buyer and per-bundle budget rows per resource."""
    if not inst.budgets:
        raise MissingBudgets("instance carries no budgets")
    keys, bundles, idx, objective, rows = _bundle_lp_core(inst)
    n = len(keys)
    for res in inst.resources():
        for j in inst.buyers:
            cap = inst.budget(res, j)
            if cap is None:
                continue
            coeffs = [Fraction(0)] * n
            touched = False
            for (i, jj, _p), pos in idx.items():
                if jj == j:
                    c = inst.rcost(res, i, j)
                    if c:
                        coeffs[pos] = c
                        touched = True
            if touched:
                rows.append((coeffs, "<=", cap))
            for (bj, p) in bundles:
                if bj != j:
                    continue
                coeffs = [Fraction(0)] * n
                for (i, jj, pp), pos in idx.items():
                    if jj == j and pp == p:
                        coeffs[pos] = inst.rcost(res, i, j)
                coeffs[idx[(p, j, p)]] -= cap
                rows.append((coeffs, "<=", Fraction(0)))
    return LinearProgram(
        objective=objective,
        rows=rows,
        names=[f"x[{i},{j},{p}]" for i, j, p in keys],
        var_keys=keys,
    )


# ---------------------------------------------------------------------------
# arrival-model LPs


def _model_vars(model: IidModel):
    """Variables over types: openers x_pjp per P-edge type, members x_ijp per
    N-edge type (i, j) and bundle (j, p).  No unambiguification is applied;
    a type may open bundles for one buyer and join bundles of another."""
    p_edges = model.p_edge_types()
    tidx = {t: k for k, t in enumerate(model.types)}
    bidx = {b: k for k, b in enumerate(model.buyers)}
    keys = []
    for i in model.types:
        for j in model.buyers:
            if (i, j) not in model.values:
                continue
            if model.is_p_edge_type(i, j):
                keys.append((i, j, i))
            else:
                for (p, jj) in p_edges:
                    if jj == j:
                        keys.append((i, j, p))
    keys.sort(key=lambda k: (tidx[k[0]], bidx[k[1]], tidx[k[2]]))
    bundles = [(j, p) for (p, j) in p_edges]
    return keys, bundles


def _model_lp(model: IidModel, item_cap, member_cap):
    """Shared structure of the arrival-model LPs.

    item_cap(i) is the rhs of the per-type row; member_cap(i) multiplies
    x_pjp in the membership row for N-edge type (i, j).
    """
    keys, bundles = _model_vars(model)
    idx = {k: pos for pos, k in enumerate(keys)}
    n = len(keys)
    objective = [model.values[(i, j)] for (i, j, _p) in keys]
    rows = []
    tidx = {t: k for k, t in enumerate(model.types)}
    bidx = {b: k for k, b in enumerate(model.buyers)}
    for (j, p) in sorted(bundles, key=lambda b: (tidx[b[1]], bidx[b[0]])):
        coeffs = [Fraction(0)] * n
        for (i, jj, pp), pos in idx.items():
            if jj == j and pp == p:
                coeffs[pos] = model.thresholds[j] * model.cost(i, j) - model.values[(i, j)]
        rows.append((coeffs, "<=", Fraction(0)))
    for i in model.types:
        coeffs = [Fraction(0)] * n
        touched = False
        for (ii, _j, _p), pos in idx.items():
            if ii == i:
                coeffs[pos] = Fraction(1)
                touched = True
        if touched:
            rows.append((coeffs, "<=", item_cap(i)))
    for (i, j, p), pos in sorted(idx.items(), key=lambda kv: kv[1]):
        if i == p:
            continue
        coeffs = [Fraction(0)] * n
        coeffs[pos] = Fraction(1)
        coeffs[idx[(p, j, p)]] = -member_cap(i)
        rows.append((coeffs, "<=", Fraction(0)))
    return LinearProgram(
        objective=objective,
        rows=rows,
        names=[f"x[{i},{j},{p}]" for i, j, p in keys],
        var_keys=keys,
    )


def build_opton_lp(model: IidModel) -> LinearProgram:
    """Relaxation of any feasible-with-probability-one online algorithm;
    its value is denoted V[ON]."""
    T = model.horizon

    def item_cap(i):
        return model.probs[i] * T

    def member_cap(i):
        return model.probs[i] * T

    return _model_lp(model, item_cap, member_cap)


def compute_kappa(gamma, T: int) -> float:
    """Concentration factor 6/min(1, gamma) * ln T / ln ln T."""
    gamma = to_fraction(gamma)
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if T < 3:
        raise DomainError("T must be at least 3 so that ln ln T is positive")
    return 6.0 / min(1.0, float(gamma)) * math.log(T) / math.log(math.log(T))


def build_optoff_lp(model: IidModel, gamma_floor) -> LinearProgram:
    """Ex-post upper-bound LP (value V[OFF]); requires q_i*T >= gamma_floor
    for every type."""
    gamma_floor = to_fraction(gamma_floor)
    if gamma_floor <= 0:
        raise DomainError("gamma floor must be positive")
    T = model.horizon
    offending = [i for i in model.types if model.probs[i] * T < gamma_floor]
    if offending:
        raise GammaViolated(offending, gamma_floor)
    kappa = to_fraction(compute_kappa(gamma_floor, T))

    def item_cap(i):
        return Fraction(2 * math.ceil(model.probs[i] * T))

    def member_cap(i):
        return Fraction(math.ceil(model.probs[i] * T * kappa))

    return _model_lp(model, item_cap, member_cap)


def solve_model_lp(lp: LinearProgram, tolerance: float = 1e-9) -> BundleLpSolution:
    """Solve any of the bundle-shaped LPs and wrap the keyed solution."""
    sol = solve_lp(lp, tolerance=tolerance)
    if sol.status != "optimal":
        raise ValueError(f"LP not optimal: {sol.status}")
    return BundleLpSolution.from_lp(lp, sol)


# -- JSON interchange for arrival models ------------------------------------
#
#   {"horizon": int, "buyers": [{"id": str, "rho": num}],
#    "types": [{"id": str, "prob": num, "values": {buyerId: num},
#               "costs": {buyerId: num}?}]}

_MODEL_BUYER_FIELDS = {"id", "rho"}
_MODEL_TYPE_FIELDS = {"id", "prob", "values", "costs"}


def model_from_dict(doc: dict) -> IidModel:
    extra = set(doc) - {"horizon", "buyers", "types"}
    if extra:
        raise ValueError(f"unknown field(s) {sorted(extra)} in model document")
    buyers, thresholds = [], {}
    for b in doc.get("buyers", []):
        extra = set(b) - _MODEL_BUYER_FIELDS
        if extra:
            raise ValueError(f"unknown field(s) {sorted(extra)} in buyer {b.get('id')!r}")
        buyers.append(b["id"])
        thresholds[b["id"]] = to_fraction(b["rho"])
    types, probs, values, costs = [], {}, {}, {}
    any_costs = False
    for t in doc.get("types", []):
        extra = set(t) - _MODEL_TYPE_FIELDS
        if extra:
            raise ValueError(f"unknown field(s) {sorted(extra)} in type {t.get('id')!r}")
        tid = t["id"]
        types.append(tid)
        probs[tid] = to_fraction(t["prob"])
        for j, v in (t.get("values") or {}).items():
            values[(tid, j)] = to_fraction(v)
        if t.get("costs") is not None:
            any_costs = True
            for j, c in t["costs"].items():
                costs[(tid, j)] = to_fraction(c)
    return IidModel(
        types=types,
        buyers=buyers,
        values=values,
        thresholds=thresholds,
        probs=probs,
        horizon=int(doc["horizon"]),
        costs=costs if any_costs else None,
    )


def model_to_dict(model: IidModel) -> dict:
    from .core import fraction_to_json

    types = []
    for i in model.types:
        rec = {
            "id": i,
            "prob": fraction_to_json(model.probs[i]),
            "values": {
                j: fraction_to_json(model.values[(i, j)])
                for j in model.buyers
                if (i, j) in model.values
            },
        }
        if model.costs is not None:
            per = {
                j: fraction_to_json(model.costs[(i, j)])
                for j in model.buyers
                if (i, j) in model.costs
            }
            if per:
                rec["costs"] = per
        types.append(rec)
    return {
        "horizon": model.horizon,
        "buyers": [
            {"id": j, "rho": fraction_to_json(model.thresholds[j])} for j in model.buyers
        ],
        "types": types,
    }


def load_model(fp) -> IidModel:
    import json

    if isinstance(fp, (str, bytes)) or hasattr(fp, "__fspath__"):
        with open(fp) as f:
            doc = json.load(f, parse_float=Fraction)
    else:
        doc = json.load(fp, parse_float=Fraction)
    return model_from_dict(doc)


def dump_model(model: IidModel, fp):
    import json

    doc = model_to_dict(model)
    if isinstance(fp, (str, bytes)) or hasattr(fp, "__fspath__"):
        with open(fp, "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
    else:
        json.dump(doc, fp, indent=2)
        fp.write("\n")
