import json
import math

import numpy as np
import pytest

from betdetect.baselines import PermutationConfig
from betdetect.betting import DEFAULT_GAMMA, BettingTrace
from betdetect.detectors import DetectorConfig, DPolicy, run_detector
from betdetect.errors import ConfigurationError, DomainError, InputDataError
from betdetect.evaluation import (
    AlphaGrid,
    EpsilonEstimation,
    MonteCarloReport,
    emit_report,
    empirical_regret,
    grid_minimizer,
    load_report,
    monte_carlo,
    ratio_diagnostic,
    regret_audit,
    regret_bound,
)
from betdetect.rng import derive_seed
from betdetect.simulation import ScoreStream, StreamSpec, bounded_gaussian_pair, generate, stream_preset


def test_default_grid():
    g = AlphaGrid()
    assert len(g) == 20
    assert g.values[0] == 0.005 and g.values[-1] == pytest.approx(0.1, abs=1e-15)
    assert np.allclose(np.diff(g.values), 0.005)
    with pytest.raises(ConfigurationError):
        AlphaGrid((0.1, 0.05))
    with pytest.raises(ConfigurationError):
        AlphaGrid((0.0,))


def test_ratio_examples():
    assert ratio_diagnostic(0.3634, 0.3634, 5.9956) == 0.0
    assert round(ratio_diagnostic(2.4786, 0.3634, 7.6444), 4) == 0.2905
    assert round(ratio_diagnostic(0.0481, 0.0766, 1.6523), 4) == -0.0181
    with pytest.raises(DomainError):
        ratio_diagnostic(1.0, 2.0, 2.0)


def _degenerate():
    z = StreamSpec.gaussian(0.0, 0.0)
    return (z, z)


def test_single_run_report_equals_outcome():
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    cfg = DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=200)
    rep = monte_carlo(cfg, (sx, sy), (sx, sy), runs=1, grid=AlphaGrid((0.05,)), master_seed=7)
    alpha, fpr, tau, frac = rep.per_alpha[0]
    seed0, seed1 = derive_seed(7, 0, 0, 0), derive_seed(7, 0, 0, 1)
    o0 = run_detector(DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=200, seed=seed0),
                      generate(sx.with_seed(seed0), sy.with_seed(seed0), 200))
    o1 = run_detector(DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=200, seed=seed1),
                      generate(sx.with_seed(seed1), sy.with_seed(seed1), 200))
    assert fpr == float(o0.declared) and frac == float(o1.declared) and tau == o1.rejection_time


def test_degenerate_streams_fpr_is_final_check_rate():
    cfg = DetectorConfig(0.1, DPolicy.constant(1.0), mode="simple", time_budget=10)
    rep = monte_carlo(cfg, _degenerate(), None, runs=3000, grid=AlphaGrid((0.1,)), master_seed=1)
    fpr = rep.per_alpha[0][1]
    assert abs(fpr - 0.1) <= 3 * math.sqrt(0.1 * 0.9 / 3000)
    assert rep.per_alpha[0][2] is None


def test_permutation_config_shares_harness():
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    cfg = PermutationConfig(batch_size=50, alpha=0.05, n_permutations=200, epsilon=cal.epsilon)
    rep = monte_carlo(cfg, None, (sx, sy), runs=5, grid=AlphaGrid((0.05,)))
    assert rep.per_alpha[0][3] == 1.0 and rep.per_alpha[0][2] == 50.0
    assert rep.config["kind"] == "permutation" and rep.ratio is None


def test_epsilon_estimation_runs():
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    cfg = DetectorConfig(0.05, DPolicy.estimate_from_prefix(10), epsilon=0.0, time_budget=300)
    est = EpsilonEstimation(sx, 20, 200)
    rep = monte_carlo(cfg, None, (sx, sy), runs=20, grid=AlphaGrid((0.05,)), epsilon_estimation=est)
    assert rep.per_alpha[0][3] > 0.5
    assert rep.config["epsilon_estimation"]["pool_size"] == 20


def test_monte_carlo_validation():
    cfg = DetectorConfig(0.1, DPolicy.constant(1.0), mode="simple", time_budget=10)
    with pytest.raises(ConfigurationError):
        monte_carlo(cfg, _degenerate(), None, runs=0)
    with pytest.raises(ConfigurationError):
        monte_carlo(cfg, None, None)
    with pytest.raises(ConfigurationError):
        monte_carlo(object(), _degenerate(), None)


def test_workers_do_not_change_output():
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    cfg = DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=100)
    grid = AlphaGrid((0.02, 0.05, 0.1))
    a = monte_carlo(cfg, (sx, sx), (sx, sy), runs=20, grid=grid, master_seed=3, workers=1)
    b = monte_carlo(cfg, (sx, sx), (sx, sy), runs=20, grid=grid, master_seed=3, workers=2)
    assert a.to_json() == b.to_json()


def test_report_round_trip_and_emit(tmp_path):
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    cfg = DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=100)
    rep = monte_carlo(cfg, (sx, sx), (sx, sy), runs=10, master_seed=5)
    assert rep.ratio == pytest.approx(ratio_diagnostic(2.4786, 0.3634, 7.6444), abs=1e-12)
    paths = emit_report(rep, tmp_path / "out", "both")
    assert [p.name for p in paths] == ["report.json", "report.csv"]
    back = load_report(paths[0])
    assert back.to_dict() == rep.to_dict()
    assert MonteCarloReport.from_json(rep.to_json()).to_json() == rep.to_json()
    lines = paths[1].read_text().splitlines()
    assert lines[0] == "alpha,fpr,mean_tau,declared_fraction_h1" and len(lines) == 21
    data = json.loads(paths[0].read_text())
    assert data["master_seed"] == 5 and data["config"]["detector"]["epsilon"] == 0.3634


def test_empty_grid_header_only(tmp_path):
    rep = MonteCarloReport(per_alpha=[], runs=1)
    (path,) = emit_report(rep, tmp_path / "r.csv", "csv")
    assert path.read_text() == "alpha,fpr,mean_tau,declared_fraction_h1\n"
    with pytest.raises(ConfigurationError):
        emit_report(rep, tmp_path, "xml")


def test_rows_in_bounds():
    sx, sy, cal = stream_preset("fastdetect-neo27-flash")
    cfg = DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=100)
    rep = monte_carlo(cfg, (sx, sx), (sx, sy), runs=10)
    for alpha, fpr, tau, frac in rep.per_alpha:
        assert 0 <= fpr <= 1 and 1 <= tau <= 100 and 0 <= frac <= 1


# -- regret --------------------------------------------------------------------


def _simple_trace(g, d):
    # threshold 1e300 is never reached, so the whole sequence is played
    cfg = DetectorConfig(1e-300, DPolicy.constant(d), mode="simple", time_budget=None)
    return run_detector(cfg, ScoreStream(np.asarray(g, float), np.zeros(len(g)))).betting_trace()


def test_zero_outcome_regret():
    tr = _simple_trace(np.zeros(50), 1.0)
    reg, bound, ok = regret_audit(tr, 1.0, DEFAULT_GAMMA)
    assert reg == 0.0 and ok and bound > 0


def test_one_step_regret():
    tr = _simple_trace([0.7], 1.0)
    audit = regret_audit(tr, 1.0, DEFAULT_GAMMA)
    star = audit.theta_star
    assert star == pytest.approx(-0.5, abs=1e-12)  # -ln(1 - 0.7 theta) is increasing in theta
    direct = -math.log(1 - 0.7 * 0.0) + math.log(1 - 0.7 * star)
    assert audit.empirical_regret == pytest.approx(direct, abs=1e-15)


def test_grid_minimizer_matches_exhaustive_scan():
    rng = np.random.default_rng(4)
    for _ in range(20):
        g = rng.uniform(-1, 1, 30) + rng.uniform(-0.5, 0.5)
        lo, hi = -0.5, 0.5
        grid = np.append(np.arange(lo, hi, 1e-3), hi)
        losses = [-np.sum(np.log1p(-g * u)) for u in grid]
        exhaustive = grid[int(np.argmin(losses))]
        found = grid_minimizer(g, lo, hi, 1e-3)
        assert -np.sum(np.log1p(-g * found)) == pytest.approx(min(losses), abs=1e-12)
        assert abs(found - exhaustive) <= 1e-3 + 1e-12


def test_log_wealth_identity():
    rng = np.random.default_rng(5)
    d = 2.0
    g = rng.uniform(-d, d, 300)
    tr = _simple_trace(g, d)
    wealth = np.prod(1 - tr.g * tr.theta)
    for u in (-0.25, -0.1, 0.0, 0.2, 0.25):
        lhs = math.log(wealth)
        rhs = float(np.sum(np.log1p(-tr.g * u))) - empirical_regret(tr, u)
        assert abs(lhs - rhs) <= 1e-9


def test_audit_skips_violations():
    tr = BettingTrace(np.array([0.1, 3.0]), np.array([0.0, 0.4]), np.array([-0.5, -0.5]), np.array([0.5, 0.5]))
    audit = regret_audit(tr, 1.0, DEFAULT_GAMMA)
    assert audit.skipped and audit.satisfied is None and "d_star" in audit.reason
    tr2 = BettingTrace(np.array([0.1, 3.0]), np.array([0.0, 0.4]), np.array([-0.5, -0.5]), np.array([0.5, 0.5]))
    audit2 = regret_audit(tr2, 5.0, DEFAULT_GAMMA)
    assert audit2.skipped and "factor" in audit2.reason
    with pytest.raises(InputDataError):
        regret_audit(BettingTrace(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0)), 1.0, DEFAULT_GAMMA)
    with pytest.raises(DomainError):
        empirical_regret(tr2, 0.0)


def test_regret_bound_formula():
    assert regret_bound(2.0, 0.5, 100, 0.5) == pytest.approx(math.log(1 + 1600) + 0.0625, rel=1e-15)


@pytest.mark.slow
def test_average_preset_fpr_and_tau():
    hx, hy, _ = stream_preset("fastdetect-neo27-avg/h0")
    sx, sy, cal = stream_preset("fastdetect-neo27-avg")
    cfg = DetectorConfig(0.05, DPolicy.constant(cal.d), epsilon=cal.epsilon, time_budget=500)
    runs = 1000
    rep = monte_carlo(cfg, (hx, hy), (sx, sy), runs=runs, master_seed=12)
    for alpha, fpr, tau, frac in rep.per_alpha:
        assert fpr <= alpha + 3 * math.sqrt(alpha * (1 - alpha) / runs)
        assert tau < 500
    assert rep.violation_count == 0


@pytest.mark.slow
def test_power_trend_in_gap():
    d, eps = 7.6444, 0.3634
    cfg = DetectorConfig(0.05, DPolicy.constant(d), epsilon=eps, time_budget=500)
    taus = []
    for c in (0.5, 1.0, 2.0):
        sx, sy = bounded_gaussian_pair(c * d / 4, d)
        taus.append(monte_carlo(cfg, None, (sx, sy), runs=300, grid=AlphaGrid((0.05,)), master_seed=6).per_alpha[0][2])
    assert all(b <= 1.1 * a for a, b in zip(taus, taus[1:]))
