"""Seeded Monte-Carlo experiment runner and report emitter.

Every report is a pure function of (inputs, seed): trial t runs on the
substream seed derive_trial_seed(seed, t), so results do not depend on
scheduling, and feasibility of every single trial output is re-verified in
exact arithmetic (one infeasible trial aborts the run; this is a hard
invariant, not a statistic).  Reports carry mean, sample stddev, the normal
95% CI mean +/- 1.96 s/sqrt(N), the minimum, the LP benchmark and the
per-bundle opening rates used by the marginal checks.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Instance, allocation_value
from .errors import InvalidBundling
from .lp_models import BundleLpSolution, IidModel
from .rounding import (
    OfflinePlan,
    OnlinePlan,
    derive_trial_seed,
    gamma_offline,
    gamma_online,
    greedy_p_only,
    sample_stream,
    stream_instance,
)

SEED_ENV_VAR = "AVALLOC_SEED"


@dataclass
class TrialReport:
    mode: str
    trials: int
    seed: int
    alpha: float
    beta: float
    gamma: float
    lp_value: float
    lp_value_exact: str | None
    mean: float
    stddev: float
    ci95_lo: float
    ci95_hi: float
    minimum: float
    feasible_count: int
    ratio_lp_over_mean: float
    open_rates: dict = field(default_factory=dict)
    open_expected: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "trials": self.trials,
            "seed": self.seed,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "lp_value": self.lp_value,
            "lp_value_exact": self.lp_value_exact,
            "mean": self.mean,
            "stddev": self.stddev,
            "ci95_lo": self.ci95_lo,
            "ci95_hi": self.ci95_hi,
            "min": self.minimum,
            "feasible_count": self.feasible_count,
            "ratio_lp_over_mean": self.ratio_lp_over_mean,
            "open_rates": {k: self.open_rates[k] for k in sorted(self.open_rates)},
            "open_expected": {
                k: self.open_expected[k] for k in sorted(self.open_expected)
            },
        }


def _stats(values, trials):
    floats = [float(v) for v in values]
    mean = sum(floats) / trials
    if trials > 1:
        var = sum((v - mean) ** 2 for v in floats) / (trials - 1)
    else:
        var = 0.0
    sd = var ** 0.5
    half = 1.96 * sd / (trials ** 0.5)
    return mean, sd, mean - half, mean + half, min(floats)


def _lp_value_fields(x: BundleLpSolution):
    if isinstance(x.objective, Fraction):
        return float(x.objective), f"{x.objective.numerator}/{x.objective.denominator}"
    return float(x.objective), None


def _map_chunks(fn, trials, threads):
    if threads <= 1:
        return [fn(t) for t in range(trials)]
    results = [None] * trials
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for t, res in zip(range(trials), pool.map(fn, range(trials))):
            results[t] = res
    return results


def _check_offline_output(inst: Instance, plan: OfflinePlan, opened) -> None:
    """Independent exact feasibility check of one rounding output."""
    val = {}
    cost = {}
    rsum = {}
    for b, member_items in opened.items():
        j, p = plan.bundle_label(b)
        for i in (p, *member_items):
            val[j] = val.get(j, Fraction(0)) + inst.values[(i, j)]
            cost[j] = cost.get(j, Fraction(0)) + inst.cost(i, j)
            for res in inst.resources():
                rsum[(res, j)] = rsum.get((res, j), Fraction(0)) + inst.rcost(res, i, j)
    for j, v in val.items():
        if v < inst.thresholds[j] * cost[j]:
            raise RuntimeError(f"buyer {j!r} constraint violated by a rounding output")
    if plan.budgeted:
        for (res, j), total in rsum.items():
            cap = inst.budget(res, j)
            if cap is not None and total > cap:
                raise RuntimeError(f"budget {res!r} of {j!r} violated by a rounding output")


def run_offline_trials(
    inst: Instance,
    x: BundleLpSolution,
    alpha: float | None,
    beta: float,
    seed: int,
    trials: int,
    budgeted: bool = False,
    threads: int = 1,
) -> TrialReport:
    """Monte-Carlo over the offline rounding; aborts on any infeasible
    output."""
    plan = OfflinePlan(inst, x, alpha, budgeted=budgeted)

    def one(t):
        opened, value = plan.run(derive_trial_seed(seed, t))
        _check_offline_output(inst, plan, opened)
        if t % 911 == 0:  # full structural validation on a sample of trials
            try:
                plan.to_bundled(opened).validate(inst)
            except InvalidBundling as exc:
                raise RuntimeError(f"trial {t} structurally invalid: {exc}") from exc
        return value, tuple(opened)

    results = _map_chunks(one, trials, threads)
    values = [r[0] for r in results]
    open_counts = {}
    for _v, opened in results:
        for b in opened:
            j, p = plan.bundle_label(b)
            key = f"{j}|{p}"
            open_counts[key] = open_counts.get(key, 0) + 1
    mean, sd, lo, hi, mn = _stats(values, trials)
    lp_val, lp_exact = _lp_value_fields(x)
    eff_alpha = plan.alpha
    expected = {}
    for (i, j, p), v in x.x.items():
        if i == p and float(v) > 0:
            expected[f"{j}|{p}"] = float(v)
    return TrialReport(
        mode="offline-budgeted" if budgeted else "offline",
        trials=trials,
        seed=seed,
        alpha=eff_alpha,
        beta=beta,
        gamma=gamma_offline(eff_alpha, beta),
        lp_value=lp_val,
        lp_value_exact=lp_exact,
        mean=mean,
        stddev=sd,
        ci95_lo=lo,
        ci95_hi=hi,
        minimum=mn,
        feasible_count=trials,
        ratio_lp_over_mean=(lp_val / mean if mean else float("inf")),
        open_rates={k: c / trials for k, c in open_counts.items()},
        open_expected=expected,
    )


def verify_prefix_feasibility(model: IidModel, trace) -> bool:
    """Exact check that every decision kept every buyer's constraint."""
    value = {j: Fraction(0) for j in model.buyers}
    count = {j: 0 for j in model.buyers}
    for rec in trace:
        if rec.reason == "opened":
            j = rec.bundle[0]
            value[j] += model.values[(rec.type, j)]
            count[j] += 1
        elif rec.reason == "singleton+permissible":
            j = rec.bundle[0]
            value[j] += model.values[(rec.type, j)]
            count[j] += 1
        else:
            continue
        if value[j] < model.thresholds[j] * count[j]:
            return False
    return True


def _verify_prefix_from_raw(model: IidModel, opened, members) -> bool:
    """Exact prefix-feasibility check from a raw online run: replay the
    opening/joining events in time order."""
    events = []
    for key in opened:
        j, p, t_open = key
        events.append((t_open, j, p))
        for (t, typ) in members[key]:
            events.append((t, j, typ))
    events.sort()
    value = {}
    count = {}
    for _t, j, typ in events:
        value[j] = value.get(j, Fraction(0)) + model.values[(typ, j)]
        count[j] = count.get(j, 0) + 1
        if value[j] < model.thresholds[j] * count[j]:
            return False
    return True


def run_online_trials(
    model: IidModel,
    x: BundleLpSolution,
    alpha: float | None,
    beta: float,
    seed: int,
    trials: int,
    threads: int = 1,
    streams=None,
) -> TrialReport:
    """Monte-Carlo over the online rounding on sampled (or supplied)
    streams; aborts unless every prefix of every trial is feasible."""
    plan = OnlinePlan(model, x, alpha)

    def one(t):
        stream = streams[t] if streams is not None else sample_stream(model, seed, t)
        opened, members, value, _trace = plan.run(derive_trial_seed(seed, t), stream)
        if not _verify_prefix_from_raw(model, opened, members):
            raise RuntimeError(f"trial {t} violated a prefix constraint")
        return value, opened

    results = _map_chunks(one, trials, threads)
    values = [r[0] for r in results]
    open_counts = {}
    for _v, opened in results:
        for (j, p, t_open) in opened:
            key = f"{j}|{p}|{t_open}"
            open_counts[key] = open_counts.get(key, 0) + 1
    mean, sd, lo, hi, mn = _stats(values, trials)
    lp_val, lp_exact = _lp_value_fields(x)
    eff_alpha = plan.alpha
    T = model.horizon
    expected = {}
    for (i, j, p), v in x.x.items():
        if i == p and float(v) > 0:
            for t_open in range(1, T // 2 + 1):
                expected[f"{j}|{p}|{t_open}"] = float(v) / T
    return TrialReport(
        mode="online",
        trials=trials,
        seed=seed,
        alpha=eff_alpha,
        beta=beta,
        gamma=gamma_online(eff_alpha, beta),
        lp_value=lp_val,
        lp_value_exact=lp_exact,
        mean=mean,
        stddev=sd,
        ci95_lo=lo,
        ci95_hi=hi,
        minimum=mn,
        feasible_count=trials,
        ratio_lp_over_mean=(lp_val / mean if mean else float("inf")),
        open_rates={k: c / trials for k, c in open_counts.items()},
        open_expected=expected,
    )


def run_greedy_online_trials(model: IidModel, seed: int, trials: int) -> float:
    """Mean value of highest-P-edge greedy over sampled streams (a committed
    online baseline used to sanity-check the online LP benchmark)."""
    total = Fraction(0)
    for t in range(trials):
        stream = sample_stream(model, seed, t)
        inst = stream_instance(model, stream)
        alloc = greedy_p_only(inst)
        total += allocation_value(inst, alloc)
    return float(total) / trials


# ---------------------------------------------------------------------------
# report files


def write_report_json(doc: dict, path):
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def _flatten(doc, prefix=""):
    rows = []
    if isinstance(doc, dict):
        for k, v in doc.items():
            rows.extend(_flatten(v, f"{prefix}{k}."))
    elif isinstance(doc, (list, tuple)):
        for k, v in enumerate(doc):
            rows.extend(_flatten(v, f"{prefix}{k}."))
    else:
        rows.append((prefix[:-1], doc))
    return rows


def write_report_csv(doc: dict, path):
    rows = _flatten(doc)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["key", "value"])
        for k, v in rows:
            w.writerow([k, v])


def bench_examples(trials: int = 10_000, seed: int = 0, threads: int = 1) -> dict:
    """Assemble the headline numbers of the verification battery into one
    reproducible report (a compact mirror of the acceptance suite)."""
    from .generators import (
        gen_adversarial_T,
        gen_genava_clique,
        gen_integrality_gap,
        gen_iid_lower_bound,
        gen_max_coverage,
        gen_supply_example,
        gen_tightness_example,
    )
    from .bundling import duplicate_supply
    from .lp_models import (
        build_bundle_lp,
        build_naive_lp,
        build_opton_lp,
        build_optoff_lp,
        compute_kappa,
        solve_model_lp,
    )
    from .lp import solve_lp
    from .oracles import exact_bundling_opt, exact_opt

    report = {"suite": "examples", "trials": trials, "seed": seed}

    naive = {}
    for n in (2, 3, 4, 5):
        inst = gen_integrality_gap(n, Fraction(1, 10))
        sol = solve_lp(build_naive_lp(inst))
        opt, _ = exact_opt(inst)
        naive[str(n)] = {
            "lp": float(sol.exact_objective),
            "opt": float(opt),
            "ratio": float(sol.exact_objective / opt),
        }
    report["naive_lp_gap"] = naive

    gap3 = gen_integrality_gap(3, Fraction(1, 10))
    bundle_sol = solve_model_lp(build_bundle_lp(gap3))
    opt3, _ = exact_opt(gap3)
    report["bundle_lp_n3"] = {"lp": float(bundle_sol.objective), "opt": float(opt3)}

    tight = {}
    for eps in (Fraction(1, 2), Fraction(1, 5)):
        inst = gen_tightness_example(eps)
        opt, _ = exact_opt(inst)
        bopt, _ = exact_bundling_opt(inst)
        tight[str(eps)] = {"opt": float(opt), "bundling_opt": float(bopt),
                           "ratio": float(opt / bopt)}
    report["bundling_tightness"] = tight

    supply = gen_supply_example(3, Fraction(1, 100))
    base_opt, _ = exact_opt(supply)
    dup_opt, _ = exact_opt(duplicate_supply(supply, 3), max_states=2 * 10 ** 7)
    report["supply"] = {"base_opt": float(base_opt), "dup3_opt": float(dup_opt)}

    off = run_offline_trials(
        gap3, bundle_sol, alpha=0.3, beta=0.156, seed=seed, trials=trials,
        threads=threads,
    )
    report["offline_rounding_gap_n3"] = off.to_json_dict()

    model = gen_iid_lower_bound(20)
    on_lp = solve_model_lp(build_opton_lp(model))
    on = run_online_trials(
        model, on_lp, alpha=0.64, beta=0.0766, seed=seed, trials=trials,
        threads=threads,
    )
    report["online_rounding_iid_T20"] = on.to_json_dict()

    adv, order = gen_adversarial_T(5, Fraction(1, 20))
    greedy_val = allocation_value(adv, greedy_p_only(adv, order))
    adv_opt, _ = exact_opt(adv)
    report["adversarial_T5"] = {"greedy": float(greedy_val), "opt": float(adv_opt)}

    yes = gen_max_coverage([["e1", "e2"], ["e3", "e4"]], k=2, eps=Fraction(1, 10))
    yes_opt, _ = exact_opt(yes)
    no = gen_max_coverage(
        [["e1", "e2"], ["e1", "e3"], ["e1", "e4"]], k=2, eps=Fraction(1, 10)
    )
    no_opt, _ = exact_opt(no)
    report["max_coverage"] = {"yes_opt": float(yes_opt), "no_opt": float(no_opt)}

    tri = gen_genava_clique(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])
    tri_opt, _ = exact_opt(tri)
    p3 = gen_genava_clique(["a", "b", "c"], [("a", "b"), ("b", "c")])
    p3_opt, _ = exact_opt(p3)
    report["clique_reduction"] = {"triangle_opt": float(tri_opt), "path3_opt": float(p3_opt)}

    von = solve_model_lp(build_opton_lp(model)).objective
    voff = solve_model_lp(build_optoff_lp(model, 1)).objective
    report["arrival_lps_T20"] = {
        "v_on": float(von),
        "v_off": float(voff),
        "kappa": compute_kappa(1, 20),
        "kappa_1_1000": compute_kappa(1, 1000),
    }
    return report


BENCH_SUITES = {"examples": bench_examples}
