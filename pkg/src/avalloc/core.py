"""Data model for average-value allocation instances.

An instance is a bipartite valuation structure: items on one side, buyers on
the other, with an edge (i, j) wherever buyer j has positive value for item i.
Each buyer j carries a threshold rho_j, and a feasible allocation must keep
the buyer's total received value at least rho_j times the number of received
items.  In return-on-spend mode each edge additionally carries a cost c_ij
and the count on the right-hand side becomes the cost sum.  Optional budget
side constraints cap, per buyer and per named resource, the total resource
cost of the received items.

All numeric data is held as exact ``fractions.Fraction``.  Floats entering
through the Python API or through JSON files are read at face value as
decimals (0.99 becomes 99/100, not the nearest binary double), so feasibility
decisions at zero excess are exact.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

from .errors import InvalidInstance, UnknownEdge

Number = Fraction  # canonical internal numeric type


def to_fraction(x) -> Fraction:
    """Convert a boundary value to an exact rational.

    Floats are interpreted via their shortest decimal representation, strings
    may be decimals ("1.03") or ratios ("4/3"), ints and Fractions pass
    through unchanged.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a number")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(Decimal(repr(x)))
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, Decimal):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


class EdgeClass(enum.Enum):
    P = "P"
    N = "N"


def classify_edge(v, rho, c=1) -> EdgeClass:
    """Classify an edge by the sign of its excess v - rho*c.

    Zero excess counts as P.  In plain mode c is 1 and the excess is v - rho.
    """
    v, rho, c = to_fraction(v), to_fraction(rho), to_fraction(c)
    if rho <= 0:
        raise ValueError(f"threshold must be positive, got {rho}")
    if v < 0:
        raise ValueError(f"value must be nonnegative, got {v}")
    if c < 0:
        raise ValueError(f"cost must be nonnegative, got {c}")
    return EdgeClass.P if v - rho * c >= 0 else EdgeClass.N


@dataclass(frozen=True)
class Instance:
    """A bipartite valuation instance, immutable after construction.

    values maps (item, buyer) to the edge value; a missing pair is a
    non-edge and can never be allocated.  costs, when present, must cover
    every valued edge (return-on-spend mode).  budgets maps (resource, buyer)
    to a positive cap, resource_costs maps (resource, item, buyer) to a
    nonnegative per-edge resource cost (missing entries are 0).
    """

    items: tuple
    buyers: tuple
    values: dict
    thresholds: dict
    costs: dict | None = None
    budgets: dict | None = None
    resource_costs: dict | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "buyers", tuple(self.buyers))
        object.__setattr__(
            self, "values", {k: to_fraction(v) for k, v in self.values.items()}
        )
        object.__setattr__(
            self, "thresholds", {k: to_fraction(v) for k, v in self.thresholds.items()}
        )
        if self.costs is not None:
            object.__setattr__(
                self, "costs", {k: to_fraction(v) for k, v in self.costs.items()}
            )
        if self.budgets is not None:
            object.__setattr__(
                self, "budgets", {k: to_fraction(v) for k, v in self.budgets.items()}
            )
        if self.resource_costs is not None:
            object.__setattr__(
                self,
                "resource_costs",
                {k: to_fraction(v) for k, v in self.resource_costs.items()},
            )
        self._validate()
        object.__setattr__(self, "_item_index", {i: k for k, i in enumerate(self.items)})
        object.__setattr__(self, "_buyer_index", {j: k for k, j in enumerate(self.buyers)})

    def _validate(self):
        if len(set(self.items)) != len(self.items):
            raise InvalidInstance("duplicate item ids")
        if len(set(self.buyers)) != len(self.buyers):
            raise InvalidInstance("duplicate buyer ids")
        item_set, buyer_set = set(self.items), set(self.buyers)
        for (i, j), v in self.values.items():
            if i not in item_set or j not in buyer_set:
                raise InvalidInstance(f"edge ({i!r}, {j!r}) references unknown item/buyer")
            if v < 0:
                raise InvalidInstance(f"negative value on edge ({i!r}, {j!r})")
        for j in self.buyers:
            rho = self.thresholds.get(j)
            if rho is None:
                raise InvalidInstance(f"buyer {j!r} has no threshold")
            if rho <= 0:
                raise InvalidInstance(f"buyer {j!r} threshold must be positive")
        for j in self.thresholds:
            if j not in buyer_set:
                raise InvalidInstance(f"threshold for unknown buyer {j!r}")
        if self.costs is not None:
            for (i, j), c in self.costs.items():
                if (i, j) not in self.values:
                    raise InvalidInstance(f"cost on non-edge ({i!r}, {j!r})")
                if c < 0:
                    raise InvalidInstance(f"negative cost on edge ({i!r}, {j!r})")
            for e in self.values:
                if e not in self.costs:
                    raise InvalidInstance(f"valued edge {e!r} lacks a cost entry")
        if self.budgets is not None:
            for (res, j), b in self.budgets.items():
                if j not in buyer_set:
                    raise InvalidInstance(f"budget for unknown buyer {j!r}")
                if b <= 0:
                    raise InvalidInstance(f"budget {res!r} for {j!r} must be positive")
        if self.resource_costs is not None:
            for (res, i, j), c in self.resource_costs.items():
                if (i, j) not in self.values:
                    raise InvalidInstance(f"resource cost on non-edge ({i!r}, {j!r})")
                if c < 0:
                    raise InvalidInstance("negative resource cost")

    # -- basic accessors -------------------------------------------------

    @property
    def has_costs(self) -> bool:
        return self.costs is not None

    def item_index(self, i) -> int:
        return self._item_index[i]

    def buyer_index(self, j) -> int:
        return self._buyer_index[j]

    def edges(self):
        """All edges in canonical (item order, buyer order)."""
        return [
            (i, j)
            for i in self.items
            for j in self.buyers
            if (i, j) in self.values
        ]

    def value(self, i, j) -> Fraction:
        return self.values[(i, j)]

    def cost(self, i, j) -> Fraction:
        if self.costs is None:
            return Fraction(1)
        return self.costs[(i, j)]

    def excess(self, i, j) -> Fraction:
        """v_ij - rho_j * c_ij; nonnegative exactly on P-edges."""
        return self.values[(i, j)] - self.thresholds[j] * self.cost(i, j)

    def edge_class(self, i, j) -> EdgeClass:
        return EdgeClass.P if self.excess(i, j) >= 0 else EdgeClass.N

    def is_p_edge(self, i, j) -> bool:
        return self.excess(i, j) >= 0

    def edges_of_item(self, i):
        return [j for j in self.buyers if (i, j) in self.values]

    def item_class(self, i) -> str:
        """'P', 'N', 'isolated' (no edges) or 'ambiguous'."""
        classes = {self.edge_class(i, j) for j in self.edges_of_item(i)}
        if not classes:
            return "isolated"
        if classes == {EdgeClass.P}:
            return "P"
        if classes == {EdgeClass.N}:
            return "N"
        return "ambiguous"

    def p_items(self):
        return [i for i in self.items if self.item_class(i) == "P"]

    def n_items(self):
        return [i for i in self.items if self.item_class(i) == "N"]

    def ambiguous_items(self):
        return [i for i in self.items if self.item_class(i) == "ambiguous"]

    def is_unambiguous(self) -> bool:
        return not self.ambiguous_items()

    # -- budgets ---------------------------------------------------------

    def resources(self):
        """Resource names carrying at least one budget, sorted."""
        if not self.budgets:
            return []
        return sorted({res for (res, _j) in self.budgets})

    def budget(self, res, j):
        if not self.budgets:
            return None
        return self.budgets.get((res, j))

    def rcost(self, res, i, j) -> Fraction:
        if not self.resource_costs:
            return Fraction(0)
        return self.resource_costs.get((res, i, j), Fraction(0))


@dataclass(frozen=True)
class Allocation:
    """Integral assignment item -> buyer; unassigned items are absent."""

    assignment: dict

    def __post_init__(self):
        object.__setattr__(self, "assignment", dict(self.assignment))

    def items_of(self, j):
        return [i for i, jj in self.assignment.items() if jj == j]

    def __len__(self):
        return len(self.assignment)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of a feasibility check; truthy iff feasible.

    violations lists (buyer, constraint, slack) with signed slack, negative
    when violated.  The average-value constraint is named "average-value",
    budget constraints "budget:<resource>".
    """

    ok: bool
    violations: tuple

    def __bool__(self):
        return self.ok


def _check_assignment(inst: Instance, alloc: Allocation):
    for i, j in alloc.assignment.items():
        if (i, j) not in inst.values:
            raise UnknownEdge(f"allocation assigns non-edge ({i!r}, {j!r})")


def allocation_value(inst: Instance, alloc: Allocation) -> Fraction:
    """Total value of the assigned edges."""
    _check_assignment(inst, alloc)
    return sum((inst.values[(i, j)] for i, j in alloc.assignment.items()), Fraction(0))


def is_feasible(inst: Instance, alloc: Allocation) -> FeasibilityReport:
    """Check every buyer's average-value constraint and, if configured,
    every budget constraint, in exact arithmetic."""
    _check_assignment(inst, alloc)
    val = {j: Fraction(0) for j in inst.buyers}
    csum = {j: Fraction(0) for j in inst.buyers}
    rsum = {}
    for i, j in alloc.assignment.items():
        val[j] += inst.values[(i, j)]
        csum[j] += inst.cost(i, j)
        for res in inst.resources():
            rsum[(res, j)] = rsum.get((res, j), Fraction(0)) + inst.rcost(res, i, j)
    violations = []
    for j in inst.buyers:
        slack = val[j] - inst.thresholds[j] * csum[j]
        if slack < 0:
            violations.append((j, "average-value", slack))
        for res in inst.resources():
            cap = inst.budget(res, j)
            if cap is None:
                continue
            bslack = cap - rsum.get((res, j), Fraction(0))
            if bslack < 0:
                violations.append((j, f"budget:{res}", bslack))
    return FeasibilityReport(ok=not violations, violations=tuple(violations))


def restrict_edges(inst: Instance, keep) -> Instance:
    """Sub-instance keeping only the edges in ``keep`` (same items/buyers)."""
    keep = set(keep)
    values = {e: v for e, v in inst.values.items() if e in keep}
    costs = None
    if inst.costs is not None:
        costs = {e: c for e, c in inst.costs.items() if e in keep}
    rcosts = None
    if inst.resource_costs is not None:
        rcosts = {
            (res, i, j): c
            for (res, i, j), c in inst.resource_costs.items()
            if (i, j) in keep
        }
    return Instance(
        items=inst.items,
        buyers=inst.buyers,
        values=values,
        thresholds=dict(inst.thresholds),
        costs=costs,
        budgets=dict(inst.budgets) if inst.budgets is not None else None,
        resource_costs=rcosts,
        metadata=dict(inst.metadata),
    )


# -- JSON interchange ----------------------------------------------------
#
# Schema (unknown fields are rejected):
#   {"buyers": [{"id": str, "rho": num, "budgets": {res: num}?}],
#    "items": [{"id": str, "values": {buyerId: num},
#               "costs": {buyerId: num}?,
#               "resource_costs": {res: {buyerId: num}}?}]}
#
# Numbers may also be strings holding exact rationals ("4/3"); the writer
# emits a plain decimal whenever it round-trips exactly and a "p/q" string
# otherwise.

_BUYER_FIELDS = {"id", "rho", "budgets"}
_ITEM_FIELDS = {"id", "values", "costs", "resource_costs"}


def _reject_unknown(d, allowed, where):
    extra = set(d) - allowed
    if extra:
        raise InvalidInstance(f"unknown field(s) {sorted(extra)} in {where}")


def instance_from_dict(doc: dict) -> Instance:
    _reject_unknown(doc, {"buyers", "items"}, "instance document")
    buyers, thresholds, budgets = [], {}, {}
    for b in doc.get("buyers", []):
        _reject_unknown(b, _BUYER_FIELDS, f"buyer {b.get('id')!r}")
        bid = b["id"]
        buyers.append(bid)
        thresholds[bid] = to_fraction(b["rho"])
        for res, cap in (b.get("budgets") or {}).items():
            budgets[(res, bid)] = to_fraction(cap)
    items, values, costs, rcosts = [], {}, {}, {}
    any_costs = False
    for it in doc.get("items", []):
        _reject_unknown(it, _ITEM_FIELDS, f"item {it.get('id')!r}")
        iid = it["id"]
        items.append(iid)
        for j, v in (it.get("values") or {}).items():
            values[(iid, j)] = to_fraction(v)
        if it.get("costs") is not None:
            any_costs = True
            for j, c in it["costs"].items():
                costs[(iid, j)] = to_fraction(c)
        for res, per_buyer in (it.get("resource_costs") or {}).items():
            for j, c in per_buyer.items():
                rcosts[(res, iid, j)] = to_fraction(c)
    return Instance(
        items=items,
        buyers=buyers,
        values=values,
        thresholds=thresholds,
        costs=costs if any_costs else None,
        budgets=budgets or None,
        resource_costs=rcosts or None,
    )


def fraction_to_json(x: Fraction):
    """Render a Fraction as a JSON-safe number when exact, else "p/q"."""
    if x.denominator == 1:
        return int(x)
    f = float(x)
    if math.isfinite(f) and Fraction(Decimal(repr(f))) == x:
        return f
    return f"{x.numerator}/{x.denominator}"


def instance_to_dict(inst: Instance) -> dict:
    buyers = []
    for j in inst.buyers:
        b = {"id": j, "rho": fraction_to_json(inst.thresholds[j])}
        if inst.budgets:
            per = {
                res: fraction_to_json(cap)
                for (res, jj), cap in sorted(inst.budgets.items())
                if jj == j
            }
            if per:
                b["budgets"] = per
        buyers.append(b)
    items = []
    for i in inst.items:
        rec = {
            "id": i,
            "values": {
                j: fraction_to_json(inst.values[(i, j)])
                for j in inst.buyers
                if (i, j) in inst.values
            },
        }
        if inst.costs is not None:
            per = {
                j: fraction_to_json(inst.costs[(i, j)])
                for j in inst.buyers
                if (i, j) in inst.costs
            }
            if per:
                rec["costs"] = per
        if inst.resource_costs:
            byres = {}
            for (res, ii, j), c in sorted(inst.resource_costs.items()):
                if ii == i:
                    byres.setdefault(res, {})[j] = fraction_to_json(c)
            if byres:
                rec["resource_costs"] = byres
        items.append(rec)
    return {"buyers": buyers, "items": items}


def load_instance(fp) -> Instance:
    """Read an instance from a JSON file object or path."""
    if isinstance(fp, (str, bytes)) or hasattr(fp, "__fspath__"):
        with open(fp) as f:
            doc = json.load(f, parse_float=Fraction)
    else:
        doc = json.load(fp, parse_float=Fraction)
    return instance_from_dict(doc)


def dump_instance(inst: Instance, fp):
    doc = instance_to_dict(inst)
    if isinstance(fp, (str, bytes)) or hasattr(fp, "__fspath__"):
        with open(fp, "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
    else:
        json.dump(doc, fp, indent=2)
        fp.write("\n")
