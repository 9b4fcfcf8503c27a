"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import math

import numpy as np
import pytest

from betdetect.baselines import PermutationConfig
from betdetect.betting import DEFAULT_GAMMA, log_loss, log_loss_gradient
from betdetect.calibration import oracle_epsilon
from betdetect.cli import run as cli_run
from betdetect.detectors import DetectorConfig, DPolicy, run_detector
from betdetect.evaluation import AlphaGrid, monte_carlo, ratio_diagnostic, regret_audit
from betdetect.simulation import ScoreStream, StreamSpec, bounded_gaussian_pair, stream_preset

from oracles import composite_trajectory, simple_trajectory


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return emit


def band(alpha, runs):
    return 3 * math.sqrt(alpha * (1 - alpha) / runs)


def test_1_type_one_error_control(report):
    rng = np.random.default_rng(2024)
    pool_a, pool_b = rng.normal(0, 1, 500), rng.normal(0, 1, 500)  # disjoint human pools
    eps = oracle_epsilon(pool_a, pool_b)
    spec = StreamSpec.gaussian(0.0, 1.0, (-3.0, 3.0))
    cfg = DetectorConfig(0.05, DPolicy.constant(6.0), mode="composite", epsilon=eps, time_budget=500)
    runs = 1000
    rep = monte_carlo(cfg, (spec, spec), None, runs=runs, grid=AlphaGrid(), master_seed=1)
    slack = [a + band(a, runs) - fpr for a, fpr, _, _ in rep.per_alpha]
    ok = len(rep.per_alpha) == 20 and min(slack) >= 0
    worst = min(zip(slack, rep.per_alpha))[1]
    assert report(1, "type-I error control", ok, f"eps={eps:.4f}, tightest alpha={worst[0]:.4f} fpr={worst[1]:.4f}")


def test_2_power_and_rejection_time(report):
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    assert (sy.mean() - sx.mean(), cal.epsilon, cal.d) == (pytest.approx(2.4786, abs=1e-12), 0.3634, 7.6444)
    cfg = DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=500)
    rep = monte_carlo(cfg, None, (sx, sy), runs=1000, grid=AlphaGrid((0.05,)), master_seed=2)
    _, _, tau, frac = rep.per_alpha[0]
    taus = []
    for gap in (1.0, 2.0, 3.0):
        px, py = bounded_gaussian_pair(gap, cal.d)
        r = monte_carlo(cfg, None, (px, py), runs=1000, grid=AlphaGrid((0.05,)), master_seed=3)
        taus.append(r.per_alpha[0][2])
    monotone = all(b <= 1.1 * a for a, b in zip(taus, taus[1:]))
    ok = frac >= 0.99 and tau < 300 and monotone
    detail = f"declared={frac:.3f}, mean tau={tau:.1f}, tau by gap 1/2/3 = " + "/".join(f"{t:.1f}" for t in taus)
    assert report(2, "power and rejection time", ok, detail)


def test_3_ratio_diagnostic(report):
    cases = [((2.4786, 0.3634, 7.6444), 0.2905), ((3.6338, 0.4232, 9.1603), 0.3675), ((0.0481, 0.0766, 1.6523), -0.0181)]
    got = [round(ratio_diagnostic(*args), 4) for args, _ in cases]
    ok = got == [want for _, want in cases]
    assert report(3, "ratio diagnostic", ok, f"got {got}")


def test_4_regret_bound(report):
    rng = np.random.default_rng(4)
    slack = []
    for i in range(100):
        d = float(rng.uniform(0.1, 10))
        kind = i % 4
        if kind == 0:
            g = rng.uniform(-d, d, 500)
        elif kind == 1:
            g = np.clip(rng.normal(rng.uniform(-d / 2, d / 2), d / 4, 500), -d, d)
        elif kind == 2:
            g = np.full(500, d * rng.choice([-1.0, 1.0]))
        else:
            g = np.where(rng.random(500) < 0.8, -d, d) * rng.uniform(0.5, 1)
        cfg = DetectorConfig(1e-300, DPolicy.constant(d), mode="simple", time_budget=500)
        out = run_detector(cfg, ScoreStream(g, np.zeros(500)))
        assert out.violations == () and len(out.g) == 500
        audit = regret_audit(out.betting_trace(), d, DEFAULT_GAMMA)
        slack.append(audit.bound - audit.empirical_regret if audit.satisfied else -math.inf)
    ok = min(slack) >= 0
    assert report(4, "regret bound", ok, f"100 trajectories, min slack={min(slack):.4f}")


def test_5_oracle_equivalence(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(50):
        mode = "simple" if i % 2 else "composite"
        d = float(rng.uniform(0.2, 10))
        T = int(rng.integers(10, 500))
        eps = float(rng.uniform(0, 0.5 * d)) if mode == "composite" else 0.0
        alpha = float(rng.uniform(0.005, 0.2))
        x = rng.normal(0, d / 6, T)
        y = rng.normal(rng.uniform(-d / 3, d / 3), d / 6, T)
        g = np.clip(x - y, -d, d)
        cfg = DetectorConfig(alpha, DPolicy.constant(d), mode=mode, epsilon=eps, time_budget=T, seed=i)
        out = run_detector(cfg, ScoreStream(g, np.zeros(T)))
        dd = [d] * (T + 1)
        if mode == "simple":
            ref, _ = simple_trajectory(list(g), dd, threshold=cfg.threshold)
            assert len(ref) == len(out.wealth)
            worst = max(worst, max(abs(a - b) for a, b in zip(ref, out.wealth)))
        else:
            ref = composite_trajectory(list(g), dd, eps, threshold=cfg.threshold)
            assert len(ref) == len(out.wealth)
            worst = max(worst, max(abs(r[0] - w) for r, w in zip(ref, out.wealth)))
            worst = max(worst, max(abs(r[1] - w) for r, w in zip(ref, out.wealth_b)))
    ok = worst <= 1e-12
    assert report(5, "oracle equivalence", ok, f"50 configs, max abs diff={worst:.2e}")


def test_6_gradient_check(report):
    rng = np.random.default_rng(6)
    worst = 0.0
    n = 0
    while n < 1000:
        g, theta = rng.uniform(-10, 10), rng.uniform(-1, 1)
        if 1 - g * theta < 0.1:
            continue
        h = 1e-6 * max(1.0, abs(theta))
        fd = (log_loss(g, theta + h) - log_loss(g, theta - h)) / (2 * h)
        exact = log_loss_gradient(g, theta)
        worst = max(worst, abs(exact - fd) / max(abs(exact), 1e-3))
        n += 1
    ok = worst <= 1e-6
    assert report(6, "gradient check", ok, f"1000 points, max rel err={worst:.2e}")


def test_7_baseline_behavior(report):
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    k = 25
    fast = PermutationConfig(batch_size=k, alpha=0.05, n_permutations=2000, epsilon=cal.epsilon)
    r = monte_carlo(fast, None, (sx, sy), runs=200, grid=AlphaGrid((0.05,)), master_seed=7)
    tau = r.per_alpha[0][2]
    hx, hy, hcal = stream_preset("fastdetect-neo27-flash/h0")
    under = 0.1  # below the true human-human gap of 0.3634
    fprs = {}
    for corr in ("none", "geometric"):
        cfg = PermutationConfig(batch_size=k, alpha=0.05, n_permutations=2000, correction=corr, epsilon=under)
        fprs[corr] = monte_carlo(cfg, (hx, hy), None, runs=500, grid=AlphaGrid((0.05,)), master_seed=8).per_alpha[0][1]
    ok = abs(tau - k) <= k and fprs["none"] > fprs["geometric"]
    detail = f"mean tau={tau:.1f} at k={k}; H0 fpr uncorrected={fprs['none']:.3f} geometric={fprs['geometric']:.3f}"
    assert report(7, "baseline behavior", ok, detail)


def test_8_randomized_ville(report):
    zero = StreamSpec.gaussian(0.0, 0.0)
    cfg = DetectorConfig(0.05, DPolicy.constant(1.0), mode="simple", time_budget=5)
    runs = 10_000
    rep = monte_carlo(cfg, (zero, zero), None, runs=runs, grid=AlphaGrid((0.01, 0.05, 0.1)), master_seed=9)
    dev = [(a, fpr, abs(fpr - a) / band(a, runs)) for a, fpr, _, _ in rep.per_alpha]
    ok = all(r <= 1 for _, _, r in dev)
    detail = ", ".join(f"alpha={a} rate={f:.4f}" for a, f, _ in dev)
    assert report(8, "randomized Ville sanity", ok, detail)


def test_9_determinism(report, tmp_path):
    cfg = tmp_path / "manifest.yaml"
    cfg.write_text(
        "h0: fastdetect-neo27-flash/h0\nh1: fastdetect-neo27-flash\nruns: 50\nseed: 11\n"
    )
    for sub in ("first", "second"):
        assert cli_run(["evaluate", "--config", str(cfg), "--output-dir", str(tmp_path / sub)]) == 0
    same = all(
        (tmp_path / "first" / n).read_bytes() == (tmp_path / "second" / n).read_bytes()
        for n in ("report.csv", "report.json")
    )
    assert report(9, "determinism", same, "evaluate manifest run twice, CSV and JSON compared byte for byte")
