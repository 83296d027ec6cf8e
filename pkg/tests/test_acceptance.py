"""Acceptance battery: one test per criterion, at the stated replication
counts and tolerances, printing one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they go.
"""

import json
import math
import time

import numpy as np
import pytest

import sdelab as s
from sdelab.models import gbm, delay_ode, gbm_exact_terminal
from sdelab import parse_config, run_experiment

ONE_WIENER = s.MartingaleMeasureSpec(wiener_count=1)
NO_NOISE = s.MartingaleMeasureSpec(wiener_count=0)


def report(num: int, ok: bool, detail: str):
    line = f"ACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'} :: {detail}"
    print(line)
    assert ok, line


def test_01_counterexample_closed_forms():
    t0 = time.perf_counter()
    reps = 1_000_000
    oks, details = [], []
    for j, q in enumerate((0.5, 0.9, 0.99)):
        st = s.counterexample_stats(q, 0.5, 0.5, reps, seed=101, stream_index=j)
        exact = (1 - q) ** (0.5 * (1 - 2.0)) * q ** 0.5  # p(1 - 1/alpha) = -1/2
        oks.append(abs(st.lhs_mc - st.lhs_exact) <= 4 * st.lhs_stderr)
        oks.append(abs(st.h_moment_mc - 1.0) <= 4 * st.h_moment_stderr)
        oks.append(st.lhs_exact == pytest.approx(exact, rel=1e-12))
        details.append(f"q={q}: mc={st.lhs_mc:.4f} exact={st.lhs_exact:.4f}")
    elapsed = time.perf_counter() - t0
    oks.append(elapsed < 10.0)
    report(1, all(oks), f"{'; '.join(details)}; {elapsed:.1f}s (<10s)")


def test_02_divergence_trend(tmp_path):
    cfg = parse_config(
        "kind: counterexample\nq_values: [0.5, 0.9, 0.99, 0.999]\n"
        "p: 0.5\nalpha: 0.5\nreplications: 1000\nseed: 2\n"
    )
    run_experiment(cfg, out_dir=tmp_path)
    rows = (tmp_path / "counterexample.csv").read_text().strip().split("\n")[1:]
    exact = [float(r.split(",")[3]) for r in rows]
    ok = all(a < b for a, b in zip(exact, exact[1:]))
    report(2, ok, f"lhs_exact column {['%.3f' % v for v in exact]} strictly increasing")


def test_03_lenglart_moment_bound():
    t0 = time.perf_counter()
    rep = s.lenglart_moment(*s.brownian_square_pairs(100_000, 2048, seed=303), p=0.5)
    elapsed = time.perf_counter() - t0
    target = math.sqrt(math.pi / 2)
    ok = abs(rep.lhs - target) <= 0.02 and rep.lhs <= s.c_p(0.5) and rep.holds
    ok = ok and elapsed < 60.0
    report(
        3, ok,
        f"E[(sup X)^.5]={rep.lhs:.4f} vs sqrt(pi/2)={target:.4f} "
        f"(|diff|={abs(rep.lhs - target):.4f}<=0.02), bound {s.c_p(0.5):.4f}; {elapsed:.1f}s (<60s)",
    )


def test_04_gronwall_verdicts():
    t0 = time.perf_counter()
    out = []
    for p in (0.3, 0.5, 0.7):
        ens = s.gbm_squared_ensemble(10_000, p, seed=404)
        rep = s.verify_gronwall(ens, "c")
        out.append((p, rep))
    elapsed = time.perf_counter() - t0
    ok = all(r.holds for _, r in out) and elapsed < 120.0
    detail = "; ".join(f"p={p}: lhs_ci={r.lhs_ci:.3f}<=rhs={r.rhs:.1f}" for p, r in out)
    report(4, ok, f"{detail}; {elapsed:.1f}s (<120s)")


def test_05_euler_strong_order():
    t0 = time.perf_counter()
    rep = s.strong_convergence(
        gbm(), ONE_WIENER, [8, 16, 32, 64, 128], 1.0, 10_000, 505,
        gbm_exact_terminal(0.05, 0.2, 1.0, 1.0),
    )
    elapsed = time.perf_counter() - t0
    ok = abs(rep.slope + 0.5) <= 0.15 and elapsed < 120.0
    report(5, ok, f"log-log slope {rep.slope:.3f} in -0.5+-0.15; {elapsed:.1f}s (<120s)")


def test_06_delay_ode_oracle():
    errs = {}
    for n in (16, 64, 256):
        x = s.euler_solve(delay_ode(), NO_NOISE, n, 2.0, (0, 0))
        errs[n] = abs(x.value_at(2.0)[0] - (-0.5))
    ok = all(errs[n] <= 5.0 / n for n in errs)
    report(6, ok, "; ".join(f"n={n}: err={errs[n]:.2e}<=5/n={5.0/n:.2e}" for n in errs))


def test_07_resolution_gap_monotone():
    ests = [
        s.resolution_gap(gbm(), ONE_WIENER, n, 2 * n, 1.0, 0.1, 600, 707)
        for n in (8, 32, 128)
    ]
    ok = all(
        nxt.probability <= prev.ci_high and nxt.ci_low <= prev.ci_high
        for prev, nxt in zip(ests, ests[1:])
    )
    detail = "; ".join(
        f"n={n}: P={e.probability:.3f} [{e.ci_low:.3f},{e.ci_high:.3f}]"
        for n, e in zip((8, 32, 128), ests)
    )
    report(7, ok, detail)


def test_08_noise_invariants():
    reps = 100_000
    oks, parts = [], []

    # Ito isometry + zero mean for the Wiener part: g = 1, variance T = 1.
    grid = np.array([0.0, 0.5, 1.0])
    vals = np.empty(reps)
    for r in range(reps):
        real = s.sample_noise(ONE_WIENER, grid, (808, r))
        vals[r] = s.integrate(lambda t, m: np.array([1.0]), ONE_WIENER, real).value_at(1.0)[0]
    mean_ok = abs(vals.mean()) <= 3.0 / math.sqrt(reps)
    iso_ok = abs(vals.var(ddof=1) - 1.0) <= 4.0 * math.sqrt(2.0 / reps)
    oks += [mean_ok, iso_ok]
    parts.append(f"wiener mean={vals.mean():+.4f}, var={vals.var(ddof=1):.4f}")

    # Compensated Poisson part: zero mean, isometry, disjoint orthogonality.
    spec = s.MartingaleMeasureSpec(
        wiener_count=0, intensity=lambda t: 1.0, intensity_bound=1.0,
        mark_sampler=s.uniform_marks(0.0, 1.0),
    )
    ga = s.mark_rectangle(0.0, 0.4999999999)
    gb = s.mark_rectangle(0.5, 1.0)
    pa, pb = [], []
    for r in range(reps):
        real = s.sample_noise(spec, grid, (809, r))
        pa.append(s.integrate(ga, spec, real, lambda t: np.array([0.5])))
        pb.append(s.integrate(gb, spec, real, lambda t: np.array([0.5])))
    va = s.empirical_covariation(pa, pa)
    ortho = s.empirical_covariation(pa, pb)
    ta = np.array([p.value_at(1.0)[0] for p in pa])
    oks.append(va.contains(0.5))
    oks.append(ortho.contains(0.0))
    oks.append(abs(ta.mean()) <= 3.0 * ta.std(ddof=1) / math.sqrt(reps))
    parts.append(
        f"poisson var(A)={va.mean:.4f} (target .5), cov(A,B)={ortho.mean:+.4f} (target 0)"
    )
    report(8, all(oks), "; ".join(parts))


def test_09_thread_determinism(tmp_path):
    text = (
        "kind: simulate\nmodel: additive-jumps\nn: 16\nT: 1.0\nreplications: 12\n"
        "seed: 909\nnoise: {wiener: 1, jump_rate: 2.0}\n"
    )
    blobs = []
    for i, threads in enumerate((1, 4, 8)):
        cfg = parse_config(text)
        cfg.threads = threads
        out = tmp_path / f"t{i}"
        run_experiment(cfg, out_dir=out)
        rep = json.loads((out / "report.json").read_text())
        rep["metadata"].pop("timestamp")
        blobs.append(((out / "trajectories.csv").read_bytes(), json.dumps(rep, sort_keys=True)))
    ok = blobs[0] == blobs[1] == blobs[2]
    report(9, ok, "threads 1/4/8 give byte-identical trajectories and report")


def test_10_cp_minimizer():
    rng = np.random.default_rng(1010)
    ok = True
    for p in rng.uniform(0.01, 0.99, size=50):
        cp = s.c_p(p)
        obj = lambda lam: lam ** (1 - p) / (1 - p) + lam ** (-p)
        if obj(p + 1e-3) < cp - 1e-12 or obj(p - 1e-3) < cp - 1e-12:
            ok = False
            break
    report(10, ok, "objective at lambda=p+-1e-3 never undercuts c_p (50 random p)")
