"""Brute-force ground truth for small instances.

exact_opt enumerates, per buyer, every feasible subset of that buyer's edge
neighborhood and combines them by dynamic programming over the remaining
item set, so correctness never relies on any structural shortcut.  The state
budget is quoted as (buyers+1)^items, the size of the raw assignment space;
the DP itself visits at most 3^items * buyers (subset, subset-of-subset)
pairs.  exact_bundling_opt replaces per-buyer feasibility by "partitionable
into permissible bundles" (memoized over bitmask subsets), and
exact_gap_opt searches bin-opening choices (one per partition group) times
element packings with a value-bound prune.  Everything runs in exact
rational arithmetic.
"""

from __future__ import annotations

from fractions import Fraction

from .bundling import Bundle, BundledAllocation
from .core import Allocation, Instance
from .errors import TooLarge

DEFAULT_STATE_LIMIT = 10_000_000
_DP_MASK_LIMIT = 1 << 17  # memory guard for the subset tables


def _state_count(inst: Instance) -> int:
    return (len(inst.buyers) + 1) ** len(inst.items)


def _buyer_tables(inst: Instance, j):
    """Bitmask tables over buyer j's edge neighborhood: value sum, cost sum,
    resource cost sums."""
    n = len(inst.items)
    edge_mask = 0
    for k, i in enumerate(inst.items):
        if (i, j) in inst.values:
            edge_mask |= 1 << k
    val = {0: Fraction(0)}
    cost = {0: Fraction(0)}
    rsums = {res: {0: Fraction(0)} for res in inst.resources()}
    sub = edge_mask
    masks = []
    while True:
        if sub:
            masks.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & edge_mask
    for mask in sorted(masks):
        low = mask & -mask
        rest = mask ^ low
        i = inst.items[low.bit_length() - 1]
        val[mask] = val[rest] + inst.values[(i, j)]
        cost[mask] = cost[rest] + inst.cost(i, j)
        for res in rsums:
            rsums[res][mask] = rsums[res][rest] + inst.rcost(res, i, j)
    return edge_mask, val, cost, rsums


def _budget_ok(inst: Instance, j, rsums, mask) -> bool:
    for res in rsums:
        cap = inst.budget(res, j)
        if cap is not None and rsums[res][mask] > cap:
            return False
    return True


def _allocation_dp(inst: Instance, admissible, max_states: int):
    """Maximize total value over item partitions, buyer j receiving a set
    admitted by admissible(j, mask, tables).  Returns (value, chosen masks)."""
    states = _state_count(inst)
    if states > max_states:
        raise TooLarge(states, max_states)
    n = len(inst.items)
    if (1 << n) > _DP_MASK_LIMIT:
        raise TooLarge(states, max_states)
    tables = {j: _buyer_tables(inst, j) for j in inst.buyers}
    full = (1 << n) - 1
    m = len(inst.buyers)
    g = [[Fraction(0)] * (full + 1) for _ in range(m + 1)]
    choice = [[0] * (full + 1) for _ in range(m)]
    for jpos in range(m - 1, -1, -1):
        j = inst.buyers[jpos]
        edge_mask, val, cost, rsums = tables[j]
        g_next = g[jpos + 1]
        g_cur = g[jpos]
        ch = choice[jpos]
        for S in range(full + 1):
            avail = S & edge_mask
            best = g_next[S]
            best_T = 0
            T = avail
            while T:
                if admissible(j, T, tables[j]):
                    cand = val[T] + g_next[S ^ T]
                    if cand > best:
                        best = cand
                        best_T = T
                T = (T - 1) & avail
            g_cur[S] = best
            ch[S] = best_T
    masks = []
    S = full
    for jpos in range(m):
        T = choice[jpos][S]
        masks.append(T)
        S ^= T
    return g[0][full], masks


def _single_buyer_dfs(inst: Instance, max_states: int):
    """Memoryless search for one buyer when the bitmask tables would not
    fit; prunes on the remaining positive-value sum."""
    states = _state_count(inst)
    if states > max_states:
        raise TooLarge(states, max_states)
    j = inst.buyers[0]
    rho = inst.thresholds[j]
    edges = [i for i in inst.items if (i, j) in inst.values]
    rest_value = [Fraction(0)] * (len(edges) + 1)
    for k in range(len(edges) - 1, -1, -1):
        rest_value[k] = rest_value[k + 1] + inst.values[(edges[k], j)]
    resources = inst.resources()
    best = [Fraction(0), []]

    def dfs(k, val, cost, ruse, taken):
        if val + rest_value[k] <= best[0]:
            return
        if val >= rho * cost and val > best[0]:
            best[0] = val
            best[1] = list(taken)
        if k == len(edges):
            return
        i = edges[k]
        ok = all(
            inst.budget(res, j) is None
            or ruse[res] + inst.rcost(res, i, j) <= inst.budget(res, j)
            for res in resources
        )
        if ok:
            for res in resources:
                ruse[res] += inst.rcost(res, i, j)
            taken.append(i)
            dfs(k + 1, val + inst.values[(i, j)], cost + inst.cost(i, j), ruse, taken)
            taken.pop()
            for res in resources:
                ruse[res] -= inst.rcost(res, i, j)
        dfs(k + 1, val, cost, ruse, taken)

    dfs(0, Fraction(0), Fraction(0), {res: Fraction(0) for res in resources}, [])
    return best[0], Allocation({i: j for i in best[1]})


def exact_opt(inst: Instance, max_states: int = DEFAULT_STATE_LIMIT):
    """Globally optimal feasible allocation by exhaustive search.

    Supports plain, cost-mode and budgeted instances.  Returns
    (value, Allocation); raises TooLarge beyond the state budget.
    """
    if len(inst.buyers) == 1 and (1 << len(inst.items)) > _DP_MASK_LIMIT:
        return _single_buyer_dfs(inst, max_states)

    def admissible(j, mask, tables):
        _edge, val, cost, rsums = tables
        if val[mask] < inst.thresholds[j] * cost[mask]:
            return False
        return _budget_ok(inst, j, rsums, mask)

    value, masks = _allocation_dp(inst, admissible, max_states)
    assignment = {}
    for jpos, T in enumerate(masks):
        j = inst.buyers[jpos]
        k = 0
        while T:
            if T & 1:
                assignment[inst.items[k]] = j
            T >>= 1
            k += 1
    return value, Allocation(assignment)


def _partition_tables(inst: Instance, j, tables):
    """Memoized check: can mask be partitioned into permissible bundles for
    buyer j?  Records one chosen bundle per decomposable mask."""
    edge_mask, val, cost, _rsums = tables
    p_mask = 0
    for k, i in enumerate(inst.items):
        if (i, j) in inst.values and inst.is_p_edge(i, j):
            p_mask |= 1 << k
    rho = inst.thresholds[j]
    memo = {0: True}
    pick = {}

    def permissible(B):
        if bin(B & p_mask).count("1") != 1:
            return False
        return val[B] >= rho * cost[B]

    def part(mask):
        if mask in memo:
            return memo[mask]
        low = mask & -mask
        ok = False
        B = mask
        while B:
            if B & low and permissible(B) and part(mask ^ B):
                pick[mask] = B
                ok = True
                break
            B = (B - 1) & mask
        memo[mask] = ok
        return ok

    return part, pick, p_mask


def exact_bundling_opt(inst: Instance, max_states: int = DEFAULT_STATE_LIMIT):
    """Optimal value over allocations partitionable into permissible
    bundles.  Returns (value, BundledAllocation)."""
    parters = {}

    def admissible(j, mask, tables):
        if j not in parters:
            parters[j] = _partition_tables(inst, j, tables)
        part, _pick, _pm = parters[j]
        _edge, _val, _cost, rsums = tables
        if not _budget_ok(inst, j, rsums, mask):
            return False
        return part(mask)

    value, masks = _allocation_dp(inst, admissible, max_states)
    bundles = []
    for jpos, T in enumerate(masks):
        j = inst.buyers[jpos]
        if not T:
            continue
        part, pick, p_mask = parters[j]
        mask = T
        while mask:
            B = pick[mask]
            root_bit = B & p_mask
            root = inst.items[root_bit.bit_length() - 1]
            others = B ^ root_bit
            n_items = []
            k = 0
            while others:
                if others & 1:
                    n_items.append(inst.items[k])
                others >>= 1
                k += 1
            bundles.append(Bundle(buyer=j, p_item=root, n_items=frozenset(n_items)))
            mask ^= B
    out = BundledAllocation(bundles)
    out.validate(inst)
    return value, out


def exact_gap_opt(gap, max_elements: int = 10, max_bins: int = 12) -> Fraction:
    """Exact optimum of a partition-matroid GAP instance.

    Opens at most one bin per group, packs elements into open bins within
    unit capacity, maximizes total packed value.
    """
    if len(gap.elements) > max_elements:
        raise TooLarge(len(gap.elements), max_elements)
    if len(gap.bins) > max_bins:
        raise TooLarge(len(gap.bins), max_bins)
    groups = list(gap.groups.values())
    elements = list(gap.elements)
    # optimistic per-element bound used for pruning
    best_val = []
    for e in elements:
        vals = [
            gap.values.get((e, b), Fraction(0))
            for b in gap.bins
            if gap.sizes.get((e, b), Fraction(2)) <= 1
        ]
        best_val.append(max(vals, default=Fraction(0)))
    suffix = [Fraction(0)] * (len(elements) + 1)
    for k in range(len(elements) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + best_val[k]
    best = [Fraction(0)]

    def pack(k, open_bins, capacity, acc):
        if acc + suffix[k] <= best[0]:
            return
        if k == len(elements):
            if acc > best[0]:
                best[0] = acc
            return
        e = elements[k]
        pack(k + 1, open_bins, capacity, acc)  # leave e unpacked
        for b in open_bins:
            s = gap.sizes.get((e, b))
            if s is None or s > capacity[b]:
                continue
            capacity[b] -= s
            pack(k + 1, open_bins, capacity, acc + gap.values.get((e, b), Fraction(0)))
            capacity[b] += s

    def choose(gpos, open_bins):
        if gpos == len(groups):
            capacity = {b: Fraction(1) for b in open_bins}
            pack(0, open_bins, capacity, Fraction(0))
            return
        choose(gpos + 1, open_bins)  # group stays closed
        for b in groups[gpos]:
            choose(gpos + 1, open_bins + [b])

    choose(0, [])
    return best[0]
