"""Acceptance criteria 1-10.

Each ``criterion_N`` returns ``(passed, detail)``; the pytest wrappers
record one PASS/FAIL line per criterion (shown in the terminal summary)
and then assert. Running this file directly prints the same lines.
"""

import math
import os
import sys
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

sys.path.insert(0, os.path.dirname(__file__))
from oracles import fidelity_error, piecewise_propagate  # noqa: E402

from adiaq.ec3 import count_satisfying, generate_unique  # noqa: E402
from adiaq.evolution import evolve, find_runtime  # noqa: E402
from adiaq.experiments import SweepPlan, run  # noqa: E402
from adiaq.open_system import (  # noqa: E402
    BathParams,
    DaviesGenerator,
    davies_rates,
    dissipator,
    evolve_master,
    gibbs_state,
    lowering_operators,
    relax,
    trace_distance,
)
from adiaq.operators import HamiltonianSpec, Perturbation, apply, dense, uniform_state  # noqa: E402
from adiaq.spectral import min_gap, spectrum_scan  # noqa: E402

TEMPERATURES = (0.1, 0.5, 1.0, 2.0, 10.0)


def _fmt(checks):
    return "; ".join(f"{name} {'ok' if ok else 'FAILED'} ({info})" for name, ok, info in checks)


def criterion_1():
    t0 = time.perf_counter()
    bad = []
    for n in (4, 7, 10):
        for seed in range(100):
            if count_satisfying(generate_unique(n, seed)) != 1:
                bad.append((n, seed))
    elapsed = time.perf_counter() - t0
    checks = [("unique", not bad, f"{300 - len(bad)}/300 instances"),
              ("runtime", elapsed < 60, f"{elapsed:.1f}s < 60s")]
    return all(c[1] for c in checks), _fmt(checks)


def criterion_2():
    rng = np.random.default_rng(2002)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(4, 7))
        inst = generate_unique(n, int(rng.integers(1 << 31)))
        kind = rng.choice(["none", "K1", "K2", "K3"])
        pert = None
        if kind != "none":
            strength = int(rng.integers(0, 20)) if kind == "K3" else float(rng.normal(0, 2))
            pert = Perturbation.from_seed(str(kind), strength, n, int(rng.integers(1 << 31)))
        spec = HamiltonianSpec.from_instance(inst, pert)
        s = float(rng.uniform())
        v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
        v /= np.linalg.norm(v)
        worst = max(worst, float(np.max(np.abs(apply(spec, s, v) - dense(spec, s) @ v))))
    ground_err = 0.0
    for n, seed in [(4, 0), (5, 1), (6, 2), (6, 3)]:
        inst = generate_unique(n, seed)
        spec = HamiltonianSpec.from_instance(inst)
        for s, target in ((0.0, uniform_state(n)), (1.0, np.eye(2 ** n)[inst.satisfying_assignment])):
            w, v = np.linalg.eigh(dense(spec, s))
            ground_err = max(ground_err, abs(w[0]), 1 - abs(np.vdot(v[:, 0], target)) ** 2)
            ground_err = max(ground_err, 0.0 if w[1] - w[0] > 1e-6 else 1.0)
    checks = [("apply=dense", worst <= 1e-10, f"max diff {worst:.2e} <= 1e-10"),
              ("ground pairs", ground_err <= 1e-10, f"max err {ground_err:.2e}")]
    return all(c[1] for c in checks), _fmt(checks)


def criterion_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3003)
    worst_fid, worst_norm = 0.0, 0.0
    for k in range(10):
        inst = generate_unique(4, int(rng.integers(1 << 31)))
        pert = None
        if k % 2:
            kind = ("K1", "K2", "K3")[k // 2 % 3]
            strength = int(rng.integers(1, 8)) if kind == "K3" else float(rng.uniform(-1, 1))
            pert = Perturbation.from_seed(kind, strength, 4, int(rng.integers(1 << 31)))
        spec = HamiltonianSpec.from_instance(inst, pert)
        T = float(rng.uniform(0.5, 50.0))
        res = evolve(spec, T)
        worst_fid = max(worst_fid, fidelity_error(piecewise_propagate(spec, T), res.final_state))
        worst_norm = max(worst_norm, res.norm_drift)
    elapsed = time.perf_counter() - t0
    checks = [("oracle", worst_fid <= 1e-5, f"max fidelity error {worst_fid:.2e} <= 1e-5"),
              ("norm", worst_norm <= 1e-3, f"max drift {worst_norm:.2e} <= 1e-3"),
              ("runtime", elapsed < 300, f"{elapsed:.0f}s < 300s")]
    return all(c[1] for c in checks), _fmt(checks)


def criterion_4():
    t0 = time.perf_counter()
    ladders_ok = 0
    t_half, scale = [], []
    for seed in range(10):
        spec = HamiltonianSpec.from_instance(generate_unique(7, seed))
        T, p = 1.0, 0.0
        while T <= 1e4:
            p = evolve(spec, T).success_probability
            if p >= 0.99:
                break
            T *= 2
        ladders_ok += p >= 0.99
        t_half.append(find_runtime(spec, 0.5))
        scale.append(min_gap(spec).adiabatic_scale)
    rho = float(spearmanr(t_half, scale).statistic)
    elapsed = time.perf_counter() - t0
    checks = [("ladder", ladders_ok == 10, f"{ladders_ok}/10 reach 0.99"),
              ("rank corr", rho > 0, f"spearman(T_1/2, E/D^2) = {rho:.3f} > 0"),
              ("runtime", elapsed < 1800, f"{elapsed:.0f}s < 1800s")]
    return all(c[1] for c in checks), _fmt(checks)


def criterion_5():
    t0 = time.perf_counter()
    spec7 = HamiltonianSpec.from_instance(generate_unique(7, 0))
    rows = spectrum_scan(spec7, 201, levels=2)
    interior = rows[1:-1, 2] - rows[1:-1, 1]
    deltas = np.array([min_gap(HamiltonianSpec.from_instance(generate_unique(4, seed))).delta
                       for seed in range(100)])
    inside = float(np.mean((deltas >= 0.1) & (deltas <= 0.8)))
    elapsed = time.perf_counter() - t0
    checks = [("no crossing", bool(np.all(interior > 0)), f"min interior E1-E0 {interior.min():.4f}"),
              ("n=4 gaps", inside >= 0.9,
               f"{inside:.0%} in [0.1, 0.8], range {deltas.min():.3f}..{deltas.max():.3f}"),
              ("runtime", elapsed < 600, f"{elapsed:.0f}s < 600s")]
    return all(c[1] for c in checks), _fmt(checks)


def criterion_6():
    t0 = time.perf_counter()
    inst = generate_unique(4, 0)
    spec = HamiltonianSpec.from_instance(inst)
    trace_err, min_eig = 0.0, 0.0
    for theta in TEMPERATURES:
        for T in (5.0, 50.0):
            res = evolve_master(inst, T, BathParams(0.1, 1.0 / theta))
            trace_err = max(trace_err, res.trace_error)
            min_eig = min(min_eig, res.min_eigenvalue)
    closed = max(abs(evolve_master(inst, T, BathParams(0.0, 1.0)).success_probability
                     - evolve(spec, T).success_probability) for T in (1.0, 7.0, 30.0))
    # fixed point at s=1: relax from the uniform superposition and from I/16
    theta = 1.0
    bath = BathParams(0.1, 1.0 / theta)
    target = gibbs_state(inst, bath.beta)
    starts = {"pure": np.full((16, 16), 1 / 16, dtype=complex), "mixed": np.eye(16, dtype=complex) / 16}
    gibbs_dist = {k: trace_distance(relax(spec, 1.0, r0, 2000.0, bath), target) for k, r0 in starts.items()}
    # gauge invariance of the generator under eigenvector rephasing
    rng = np.random.default_rng(6)
    lower = lowering_operators(4)
    gauge = 0.0
    for s in (0.2, 0.5, 0.9):
        w, v = np.linalg.eigh(dense(spec, s))
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        base = dissipator(rho, davies_rates(w, v.astype(complex), lower, bath))
        turned = dissipator(rho, davies_rates(w, v * np.exp(1j * rng.uniform(0, 2 * np.pi, 16)), lower, bath))
        gauge = max(gauge, float(np.max(np.abs(base - turned))))
    stationary = float(np.max(np.abs(DaviesGenerator(spec, bath)(1.0, target))))
    elapsed = time.perf_counter() - t0
    worst_gibbs = max(gibbs_dist.values())
    checks = [("trace", trace_err <= 1e-6, f"{trace_err:.1e} <= 1e-6"),
              ("positivity", min_eig >= -1e-4, f"min eig {min_eig:.1e} >= -1e-4"),
              ("closed limit", closed <= 1e-4, f"{closed:.1e} <= 1e-4"),
              ("gibbs fixed point s=1", worst_gibbs <= 1e-3,
               f"trace distance pure {gibbs_dist['pure']:.3f}, mixed {gibbs_dist['mixed']:.3f} <= 1e-3;"
               f" Gibbs is stationary (|L g| = {stationary:.1e}) but not reached"),
              ("gauge", gauge <= 1e-10, f"{gauge:.1e} <= 1e-10"),
              ("runtime", elapsed < 1800, f"{elapsed:.0f}s < 1800s")]
    return all(c[1] for c in checks), _fmt(checks)


def decoherence_sweep():
    return run(SweepPlan("decoherence", n=4, seed=0))


def criterion_7():
    t0 = time.perf_counter()
    res = decoherence_sweep()
    T_grid = sorted(set(res.column("T")))
    closed = {r[0]: r[3] for r in res.rows if r[2] == 0.0}
    curve = {theta: {r[0]: r[3] for r in res.rows if r[1] == theta and r[2] == 0.1} for theta in TEMPERATURES}
    thermal = {r[1]: r[4] for r in res.rows if r[2] == 0.1}
    T_max = T_grid[-1]
    at_end = [curve[theta][T_max] for theta in TEMPERATURES]
    ordered = all(a >= b - 0.02 for a, b in zip(at_end, at_end[1:]))
    spread = at_end[0] - at_end[-1]
    near_thermal = abs(at_end[0] - thermal[0.1])
    helped = [T for T in T_grid if curve[0.1][T] > closed[T]]
    elapsed = time.perf_counter() - t0
    checks = [("ordering", ordered and spread >= 0.2,
               f"at T={T_max:g}: " + ", ".join(f"{p:.3f}" for p in at_end) + f"; spread {spread:.3f} >= 0.2"),
              ("thermal", near_thermal <= 0.05, f"|{at_end[0]:.4f} - {thermal[0.1]:.4f}| <= 0.05"),
              ("enhancement", bool(helped), f"theta=0.1 beats closed at T in {[round(float(t), 2) for t in helped]}"),
              ("runtime", elapsed < 3 * 3600, f"{elapsed:.0f}s < 3h")]
    return all(c[1] for c in checks), _fmt(checks)


def perturbation_plans():
    common = dict(n=7, seed=0, direction_seeds=(0, 1, 2, 3))
    return SweepPlan("k1", **common), SweepPlan("k2", **common)


def criterion_8():
    t0 = time.perf_counter()
    p1, p2 = perturbation_plans()
    k1, k2 = run(p1), run(p2)
    c_max = max(k1.column("C1"))
    big = k1.select(C1=c_max)
    worst_success = max(big.column("success_prob"))
    worst_overlap = max(big.column("overlap"))
    corr = []
    for seed in p2.direction_seeds:
        part = k2.select(seed=seed)
        corr.append(float(spearmanr(part.column("success_prob"), part.column("min_gap")).statistic))
    positive = sum(c > 0 for c in corr)
    enhanced = [seed for seed in p1.direction_seeds
                if max(k1.select(seed=seed).column("success_prob")) > k1.select(seed=seed, C1=0.0).rows[0][2]]
    elapsed = time.perf_counter() - t0
    checks = [("large C1", worst_success <= 0.05 and worst_overlap <= 0.1,
               f"C1={c_max:g}: success <= {worst_success:.4f}, overlap <= {worst_overlap:.4f}"),
              ("K2 rank corr", positive >= 3, "spearman " + ", ".join(f"{c:.3f}" for c in corr)),
              ("runtime", elapsed < 3600, f"{elapsed:.0f}s < 3600s; T={k1.metadata['run_time']:.3f},"
                                          f" seeds enhanced by small C1: {enhanced}")]
    return all(c[1] for c in checks), _fmt(checks)


def k3_plan():
    # grid runs to 2.5 nT/pi so the recovery region has more than one point
    return SweepPlan("k3", n=8, seed=7, direction_seeds=(7,), c3_extent=2.5)


def _alternating_run(values):
    """Length of the longest stretch of consecutive values with sign-alternating differences."""
    d = np.sign(np.diff(values))
    best = cur = 1 if len(d) and d[0] != 0 else 0
    for a, b in zip(d, d[1:]):
        cur = cur + 1 if a * b < 0 else (1 if b != 0 else 0)
        best = max(best, cur)
    return best + 1 if best else 1


def criterion_9():
    t0 = time.perf_counter()
    res = run(k3_plan())
    n = 8
    checks = []
    for T in sorted(set(res.column("run_time"))):
        rows = [r for r in res.rows if r[1] == T]
        c = np.array([r[0] for r in rows])
        p = np.array([r[2] for r in rows])
        base = p[c == 0][0]
        threshold = 2 * n * T / math.pi
        middle = (c > 0) & (c < threshold)
        suppressed = float(p[middle].min())
        tail = np.abs(p[c >= threshold] - base)
        run_len = _alternating_run(p[middle])
        ok = suppressed < 0.5 * base and bool(np.all(tail <= 0.1)) and run_len >= 5
        checks.append((f"T={T:.3f}", ok,
                       f"nT/pi={n * T / math.pi:.1f}, base {base:.3f}, min {suppressed:.4f} < {0.5 * base:.3f},"
                       f" tail dev {tail.max():.3f} <= 0.1 over {len(tail)} values,"
                       f" alternation over {run_len} >= 5 values"))
    first = res.rows[0][2]
    checks.append(("calibration", abs(first - 0.125) <= 0.02, f"C3=0 success {first:.4f} ~ 1/8"))
    elapsed = time.perf_counter() - t0
    checks.append(("runtime", elapsed < 3600, f"{elapsed:.0f}s < 3600s"))
    return all(c[1] for c in checks), _fmt(checks)


def criterion_10():
    pairs = {}

    def twice(name, make):
        os.environ.pop("ADIAQ_THREADS", None)
        first = make()
        os.environ["ADIAQ_THREADS"] = "2"
        try:
            second = make()
        finally:
            os.environ.pop("ADIAQ_THREADS", None)
        pairs[name] = first == second

    twice("instances", lambda: "".join(generate_unique(n, s).to_text() for n in (4, 7, 10) for s in range(5)))
    twice("runtime", lambda: run(SweepPlan("runtime", n=7, seed=0, grid=(1.0, 8.0, 64.0))).to_csv())
    twice("spectrum", lambda: run(SweepPlan("spectrum", n=7, seed=0)).to_csv())
    twice("decoherence", lambda: run(SweepPlan("decoherence", n=4, seed=0, grid=(2.0, 20.0))).to_csv())
    twice("k1", lambda: run(SweepPlan("k1", n=7, seed=0, grid=(0.0, 0.3, 7.0))).to_csv())
    twice("k2", lambda: run(SweepPlan("k2", n=7, seed=0, grid=(-2.0, 0.0, 2.0))).to_csv())
    twice("k3", lambda: run(SweepPlan("k3", n=8, seed=7, direction_seeds=(7,), grid=(0, 5, 30))).to_csv())
    ok = all(pairs.values())
    return ok, ", ".join(f"{k} {'identical' if v else 'DIFFERENT'}" for k, v in pairs.items())


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


@pytest.mark.slow
@pytest.mark.parametrize("number", list(CRITERIA))
def test_criterion(number, acceptance_report):
    passed, detail = CRITERIA[number]()
    acceptance_report(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, detail


if __name__ == "__main__":
    chosen = [int(a) for a in sys.argv[1:]] or list(CRITERIA)
    failures = 0
    for k in chosen:
        passed, detail = CRITERIA[k]()
        failures += not passed
        print(f"criterion {k}: {'PASS' if passed else 'FAIL'} - {detail}", flush=True)
    sys.exit(1 if failures else 0)
