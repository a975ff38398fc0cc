"""Shared helpers for the test suite."""

from fractions import Fraction

from avalloc import Allocation, Instance


def unit_instance(values, buyers=None, costs=None, budgets=None, rcosts=None):
    """Instance with rho=1 buyers from a {(item, buyer): value} dict."""
    items = list(dict.fromkeys(i for i, _j in values))
    if buyers is None:
        buyers = list(dict.fromkeys(j for _i, j in values))
    return Instance(
        items=items,
        buyers=buyers,
        values=values,
        thresholds={j: Fraction(1) for j in buyers},
        costs=costs,
        budgets=budgets,
        resource_costs=rcosts,
    )


def random_feasible_allocation(inst, rng):
    """A feasible allocation plus a prefix-feasible arrival order: a random
    set of P-edges first, then N-edges added greedily while they fit."""
    assignment = {}
    order = []
    slack = {j: Fraction(0) for j in inst.buyers}
    items = list(inst.items)
    rng.shuffle(items)
    for i in items:
        p_choices = [j for j in inst.buyers if (i, j) in inst.values and inst.is_p_edge(i, j)]
        if p_choices and rng.random() < 0.8:
            j = rng.choice(p_choices)
            assignment[i] = j
            slack[j] += inst.excess(i, j)
            order.append(i)
    for i in items:
        if i in assignment:
            continue
        n_choices = [
            j
            for j in inst.buyers
            if (i, j) in inst.values
            and not inst.is_p_edge(i, j)
            and slack[j] + inst.excess(i, j) >= 0
        ]
        if n_choices and rng.random() < 0.8:
            j = rng.choice(n_choices)
            assignment[i] = j
            slack[j] += inst.excess(i, j)
            order.append(i)
    return Allocation(assignment), order
