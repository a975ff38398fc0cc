"""Permissible-bundle structure and transformations.

A permissible bundle for buyer j is a single P-edge plus zero or more N-edges
to the same buyer whose combined value still meets the buyer's threshold on
the whole group.  Any feasible allocation can be thinned online into such
bundles keeping at least half its value (extract_bundling); any instance can
be made unambiguous, randomly with an expected quarter of the optimum
surviving, or deterministically from a bundling of the split instance with
half the value surviving.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .core import Allocation, Instance, is_feasible, restrict_edges
from .errors import InfeasiblePrefix, InvalidBundling, UnknownEdge


@dataclass(frozen=True)
class Bundle:
    buyer: str
    p_item: str
    n_items: frozenset

    def __post_init__(self):
        object.__setattr__(self, "n_items", frozenset(self.n_items))
        if self.p_item in self.n_items:
            raise InvalidBundling(
                f"item {self.p_item!r} cannot be both the P-item and an N-item"
            )

    def members(self):
        """All items of the bundle, P-item first, N-items in sorted order."""
        return [self.p_item] + sorted(self.n_items)

    def validate(self, inst: Instance):
        j = self.buyer
        if j not in inst.thresholds:
            raise InvalidBundling(f"unknown buyer {j!r}")
        for i in self.members():
            if (i, j) not in inst.values:
                raise InvalidBundling(f"bundle uses non-edge ({i!r}, {j!r})")
        if not inst.is_p_edge(self.p_item, j):
            raise InvalidBundling(f"({self.p_item!r}, {j!r}) is not a P-edge")
        for i in self.n_items:
            if inst.is_p_edge(i, j):
                raise InvalidBundling(f"({i!r}, {j!r}) is not an N-edge")
        if self.residual_excess(inst) < 0:
            raise InvalidBundling(
                f"bundle for {j!r} rooted at {self.p_item!r} is not permissible"
            )

    def value(self, inst: Instance) -> Fraction:
        j = self.buyer
        return sum((inst.values[(i, j)] for i in self.members()), Fraction(0))

    def residual_excess(self, inst: Instance) -> Fraction:
        """Total value minus rho_j times the bundle's cost sum; >= 0 iff
        permissible."""
        j = self.buyer
        rho = inst.thresholds[j]
        return sum(
            (inst.values[(i, j)] - rho * inst.cost(i, j) for i in self.members()),
            Fraction(0),
        )


@dataclass(frozen=True)
class BundledAllocation:
    bundles: tuple

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(self.bundles))

    def validate(self, inst: Instance):
        seen = set()
        for b in self.bundles:
            b.validate(inst)
            for i in b.members():
                if i in seen:
                    raise InvalidBundling(f"item {i!r} used by two bundles")
                seen.add(i)
        report = is_feasible(inst, self.to_allocation())
        if not report:
            raise InvalidBundling(f"flattened allocation infeasible: {report.violations}")

    def to_allocation(self) -> Allocation:
        assignment = {}
        for b in self.bundles:
            for i in b.members():
                assignment[i] = b.buyer
        return Allocation(assignment)

    def value(self, inst: Instance) -> Fraction:
        return sum((b.value(inst) for b in self.bundles), Fraction(0))

    def __len__(self):
        return len(self.bundles)


def extract_bundling(inst: Instance, alloc: Allocation, arrival_order) -> BundledAllocation:
    """Thin a prefix-feasible allocation into permissible bundles, online.

    Items are processed in arrival order.  A P-edge always opens a new
    bundle.  An N-edge joins the open bundle of its buyer with the largest
    residual excess among those it fits into; if it fits nowhere, the open
    bundle with the smallest residual excess is closed and the item dropped.
    Every P-edge of the input is kept, so the result retains at least half
    the input value.  Decisions depend only on the processed prefix, so the
    assignment of an early item never changes when the order is extended.
    """
    for i, j in alloc.assignment.items():
        if (i, j) not in inst.values:
            raise UnknownEdge(f"allocation assigns non-edge ({i!r}, {j!r})")
    order = list(arrival_order)
    if len(set(order)) != len(order):
        raise ValueError("arrival order contains duplicates")
    missing = set(alloc.assignment) - set(order)
    if missing:
        raise ValueError(f"arrival order misses allocated items: {sorted(missing)}")

    # open[j] is a list of [p_item, member list, residual excess, opened_at]
    open_by_buyer = {j: [] for j in inst.buyers}
    closed = []
    prefix_slack = {j: Fraction(0) for j in inst.buyers}
    for pos, i in enumerate(order):
        j = alloc.assignment.get(i)
        if j is None:
            continue
        prefix_slack[j] += inst.excess(i, j)
        if prefix_slack[j] < 0:
            raise InfeasiblePrefix(
                f"buyer {j!r} violated after {pos + 1} arrivals (slack {prefix_slack[j]})"
            )
        exc = inst.excess(i, j)
        if exc >= 0:
            open_by_buyer[j].append([i, [], exc, pos])
            continue
        deficit = -exc
        fitting = [b for b in open_by_buyer[j] if b[2] >= deficit]
        if fitting:
            best = max(fitting, key=lambda b: (b[2], -b[3]))
            best[1].append(i)
            best[2] -= deficit
        else:
            if not open_by_buyer[j]:
                raise InfeasiblePrefix(
                    f"no open bundle for buyer {j!r} at arrival {i!r}"
                )
            worst = min(open_by_buyer[j], key=lambda b: (b[2], b[3]))
            open_by_buyer[j].remove(worst)
            closed.append((j, worst))
    records = closed + [(j, b) for j in inst.buyers for b in open_by_buyer[j]]
    records.sort(key=lambda r: r[1][3])
    bundles = [Bundle(buyer=j, p_item=b[0], n_items=frozenset(b[1])) for j, b in records]
    out = BundledAllocation(bundles)
    out.validate(inst)
    return out


def make_unambiguous_random(inst: Instance, rng) -> Instance:
    """Resolve every ambiguous item to one side with a fair coin.

    One coin is drawn per item in declared order (heads keeps the N side,
    tails the P side); items that are already pure or isolated are left
    unchanged by either branch.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    drop = set()
    for i in inst.items:
        keep_n = rng.random() < 0.5
        if inst.item_class(i) != "ambiguous":
            continue
        for j in inst.edges_of_item(i):
            p_side = inst.is_p_edge(i, j)
            if (keep_n and p_side) or (not keep_n and not p_side):
                drop.add((i, j))
    keep = [e for e in inst.values if e not in drop]
    return restrict_edges(inst, keep)


def split_ambiguous(inst: Instance):
    """Split each ambiguous item i into a positive copy (P-edges only) and a
    negative copy (N-edges only).  Returns (split instance, copy -> original
    id map)."""
    items, values, orig_of = [], {}, {}
    costs = {} if inst.costs is not None else None
    rcosts = {} if inst.resource_costs is not None else None

    def add_copy(copy_id, source_id, buyers):
        if copy_id in inst._item_index or copy_id in orig_of:
            raise InvalidBundling(f"split id {copy_id!r} collides with an existing item")
        items.append(copy_id)
        orig_of[copy_id] = source_id
        for j in buyers:
            values[(copy_id, j)] = inst.values[(source_id, j)]
            if costs is not None:
                costs[(copy_id, j)] = inst.costs[(source_id, j)]
            if rcosts is not None:
                for res in {r for (r, ii, jj) in inst.resource_costs if (ii, jj) == (source_id, j)}:
                    rcosts[(res, copy_id, j)] = inst.resource_costs[(res, source_id, j)]

    for i in inst.items:
        if inst.item_class(i) != "ambiguous":
            items.append(i)
            for j in inst.edges_of_item(i):
                values[(i, j)] = inst.values[(i, j)]
                if costs is not None:
                    costs[(i, j)] = inst.costs[(i, j)]
                if rcosts is not None:
                    for res in {r for (r, ii, jj) in inst.resource_costs if (ii, jj) == (i, j)}:
                        rcosts[(res, i, j)] = inst.resource_costs[(res, i, j)]
            continue
        p_buyers = [j for j in inst.edges_of_item(i) if inst.is_p_edge(i, j)]
        n_buyers = [j for j in inst.edges_of_item(i) if not inst.is_p_edge(i, j)]
        add_copy(f"{i}+", i, p_buyers)
        add_copy(f"{i}-", i, n_buyers)
    split = Instance(
        items=items,
        buyers=inst.buyers,
        values=values,
        thresholds=dict(inst.thresholds),
        costs=costs,
        budgets=dict(inst.budgets) if inst.budgets is not None else None,
        resource_costs=rcosts,
    )
    return split, orig_of


def make_unambiguous_deterministic(inst: Instance, bundling: BundledAllocation):
    """Convert a bundling of the split instance into one for the original.

    Builds the conflict digraph over bundles (an arc a -> b whenever some
    item's positive copy roots bundle a while its negative copy sits in b;
    each bundle has at most one out-arc, so components are single cycles with
    in-trees).  Cycle arcs are cut by deleting the negative copy from the
    head bundle; on each remaining branching the cheaper parity level is
    discarded, counting only the root's N-items since its P-item conflicts
    with nothing and is kept either way.  The result keeps at least half the
    input value and uses each original item at most once.
    """
    split, orig_of = split_ambiguous(inst)
    try:
        bundling.validate(split)
    except InvalidBundling:
        raise
    except Exception as exc:  # noqa: BLE001 - surface as bundling error
        raise InvalidBundling(str(exc)) from exc

    bundles = [
        {"buyer": b.buyer, "p": b.p_item, "members": set(b.n_items)}
        for b in bundling.bundles
    ]
    root_of_copy = {b["p"]: idx for idx, b in enumerate(bundles)}
    member_bundle = {}
    for idx, b in enumerate(bundles):
        for i in b["members"]:
            member_bundle[i] = idx

    # arcs[a] = (b, negative copy id sitting in b)
    arcs = {}
    for copy, a in root_of_copy.items():
        if copy not in orig_of:
            continue
        orig = orig_of[copy]
        other = f"{orig}-" if copy.endswith("+") else f"{orig}+"
        if other in member_bundle:
            if not other.endswith("-"):
                raise InvalidBundling(
                    f"positive copy {other!r} used as an N-item"
                )
            arcs[a] = (member_bundle[other], other)

    # locate cycles in the functional graph and cut them
    color = {}  # 0 in progress, 1 done
    for start in range(len(bundles)):
        if start in color:
            continue
        path = []
        node = start
        while node is not None and node not in color:
            color[node] = 0
            path.append(node)
            node = arcs[node][0] if node in arcs else None
        if node is not None and color[node] == 0:
            cycle = path[path.index(node):]
            for a in cycle:
                b, neg_copy = arcs.pop(a)
                bundles[b]["members"].discard(neg_copy)
        for v in path:
            color[v] = 1

    # remaining arcs are branchings pointing at their roots
    def find_root(v):
        depth = 0
        while v in arcs:
            v = arcs[v][0]
            depth += 1
        return v, depth

    comp = {}
    for v in range(len(bundles)):
        root, depth = find_root(v)
        comp.setdefault(root, []).append((v, depth))

    def bundle_value(idx, with_p=True):
        b = bundles[idx]
        j = b["buyer"]
        total = sum((split.values[(i, j)] for i in b["members"]), Fraction(0))
        if with_p:
            total += split.values[(b["p"], j)]
        return total

    kept = []  # (bundle idx, include members?)
    for root, nodes in comp.items():
        odd = [v for v, d in nodes if d % 2 == 1]
        even_nonroot = [v for v, d in nodes if d % 2 == 0 and v != root]
        v_odd = sum((bundle_value(v) for v in odd), Fraction(0))
        v_even = sum((bundle_value(v) for v in even_nonroot), Fraction(0))
        v_even += bundle_value(root, with_p=False)  # root P-item kept either way
        if v_even >= v_odd:
            kept.extend((v, True) for v in even_nonroot)
            kept.append((root, True))
        else:
            kept.extend((v, True) for v in odd)
            kept.append((root, False))

    out_bundles = []
    used_roles = {}  # original item -> 'P' | 'N'
    for idx, with_members in sorted(kept):
        b = bundles[idx]
        p_orig = orig_of.get(b["p"], b["p"])
        used_roles[p_orig] = "P"
        members = []
        if with_members:
            for i in b["members"]:
                i_orig = orig_of.get(i, i)
                used_roles[i_orig] = "N"
                members.append(i_orig)
        out_bundles.append(Bundle(buyer=b["buyer"], p_item=p_orig, n_items=frozenset(members)))

    keep_edges = []
    for i in inst.items:
        if inst.item_class(i) != "ambiguous":
            keep_edges.extend((i, j) for j in inst.edges_of_item(i))
            continue
        role = used_roles.get(i, "P")
        want_p = role == "P"
        keep_edges.extend(
            (i, j) for j in inst.edges_of_item(i) if inst.is_p_edge(i, j) == want_p
        )
    out_inst = restrict_edges(inst, keep_edges)
    out = BundledAllocation(out_bundles)
    out.validate(out_inst)
    return out_inst, out


def duplicate_supply(inst: Instance, k: int) -> Instance:
    """Replace each item by k identical copies (ids suffixed @1..@k)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    items, values = [], {}
    costs = {} if inst.costs is not None else None
    rcosts = {} if inst.resource_costs is not None else None
    for i in inst.items:
        for t in range(1, k + 1):
            copy = f"{i}@{t}"
            items.append(copy)
            for j in inst.edges_of_item(i):
                values[(copy, j)] = inst.values[(i, j)]
                if costs is not None:
                    costs[(copy, j)] = inst.costs[(i, j)]
                if rcosts is not None:
                    for res in {r for (r, ii, jj) in inst.resource_costs if (ii, jj) == (i, j)}:
                        rcosts[(res, copy, j)] = inst.resource_costs[(res, i, j)]
    return Instance(
        items=items,
        buyers=inst.buyers,
        values=values,
        thresholds=dict(inst.thresholds),
        costs=costs,
        budgets=dict(inst.budgets) if inst.budgets is not None else None,
        resource_costs=rcosts,
    )
