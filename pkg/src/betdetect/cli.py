"""Command-line entry point: ``betdetect <command> [options]``.

Commands: ``detect``, ``calibrate``, ``baseline``, ``evaluate``,
``presets``.  Settings come from an optional YAML mapping (``--config``)
with ``--set key=value`` overrides on top; values given to ``--set`` are
parsed as YAML scalars.  Machine-readable results are written to the
output directory (``--output-dir``, else the ``output_dir`` key, else
``$BETDETECT_OUTPUT_DIR``, else the current directory); a short summary
is printed to stdout.

Exit codes: 0 success, 2 configuration error, 3 input-data error,
4 numerical error.
"""

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import yaml

from . import __version__
from .baselines import PermutationConfig, batched_permutation_run
from .calibration import (
    CalibrationResult,
    estimate_d,
    estimate_epsilon,
    oracle_d,
    oracle_epsilon,
)
from .detectors import DetectorConfig, DPolicy, run_detector
from .errors import BetDetectError, ConfigurationError, InputDataError
from .evaluation import AlphaGrid, EpsilonEstimation, emit_report, monte_carlo
from .rng import STREAM_CALIBRATION, substream
from .simulation import StreamSpec, generate, list_presets, load_scores, stream_preset, preset_info

OUTPUT_DIR_ENV = "BETDETECT_OUTPUT_DIR"

# key -> commands that accept it
KEYS = {
    "seed": "all",
    "output_dir": "all",
    "format": "all",
    "alpha": ("detect", "baseline", "evaluate"),
    "mode": ("detect", "evaluate"),
    "epsilon": ("detect", "baseline", "evaluate"),
    "d": ("detect", "evaluate"),
    "d_policy": ("detect", "evaluate"),
    "prefix": ("detect", "evaluate", "calibrate"),
    "gamma": ("detect", "evaluate"),
    "time_budget": ("detect", "baseline", "evaluate"),
    "violation_policy": ("detect", "evaluate"),
    "preset": ("detect", "baseline"),
    "scores": ("detect", "baseline", "calibrate"),
    "stream_x": ("detect", "baseline"),
    "stream_y": ("detect", "baseline"),
    "batch_size": ("baseline", "evaluate"),
    "n_permutations": ("baseline", "evaluate"),
    "correction": ("baseline", "evaluate"),
    "method": ("evaluate",),
    "h0": ("evaluate",),
    "h1": ("evaluate",),
    "runs": ("evaluate",),
    "grid": ("evaluate",),
    "workers": ("evaluate",),
    "epsilon_pool": ("evaluate",),
    "calibration": ("calibrate",),
    "pool": ("calibrate",),
    "pool_b": ("calibrate",),
    "column": ("calibrate",),
    "pool_size": ("calibrate", "evaluate"),
    "shuffles": ("calibrate", "evaluate"),
}


# -- configuration -------------------------------------------------------------


def _set_dotted(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigurationError(f"--set {key}: {p!r} is not a mapping")
        node = nxt
    node[parts[-1]] = value


def load_config(path, overrides=()):
    """Read the YAML config at ``path`` (may be ``None``) and apply ``key=value`` overrides."""
    cfg = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(p.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: cannot parse YAML: {exc}") from None
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be a mapping")
        cfg.update(data)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        try:
            value = yaml.safe_load(raw) if raw else ""
        except yaml.YAMLError:
            value = raw
        _set_dotted(cfg, key.strip(), value)
    return cfg


def _check_keys(cfg, command):
    for key in cfg:
        allowed = KEYS.get(key)
        if allowed is None:
            raise ConfigurationError(f"unknown config key {key!r}")
        if allowed != "all" and command not in allowed:
            raise ConfigurationError(f"config key {key!r} does not apply to {command}")


def _get(cfg, key, kind, default=None):
    if key not in cfg or cfg[key] is None:
        return default
    value = cfg[key]
    try:
        if kind is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise ValueError
            return value
    except (TypeError, ValueError):
        raise ConfigurationError(f"config key {key!r}: expected {kind.__name__}, got {value!r}") from None
    return value


def _require(cfg, key, kind):
    value = _get(cfg, key, kind)
    if value is None:
        raise ConfigurationError(f"missing required config key {key!r}")
    return value


def _time_budget(cfg, default=500):
    if "time_budget" in cfg and cfg["time_budget"] is None:
        return None
    return _get(cfg, "time_budget", int, default)


def _spec(value, key):
    if isinstance(value, StreamSpec):
        return value
    if not isinstance(value, dict):
        raise ConfigurationError(f"config key {key!r}: expected a stream mapping")
    try:
        return StreamSpec.from_dict(value)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"config key {key!r}: bad stream spec ({exc})") from None
    except InputDataError as exc:
        raise ConfigurationError(f"config key {key!r}: {exc}") from None


def _pair(value, key):
    """``(spec_x, spec_y, calibration or None)`` from a preset name or ``{x, y}`` mapping."""
    if isinstance(value, str):
        return stream_preset(value)
    if isinstance(value, dict) and "preset" in value:
        return stream_preset(str(value["preset"]))
    if isinstance(value, dict) and "x" in value and "y" in value:
        return _spec(value["x"], f"{key}.x"), _spec(value["y"], f"{key}.y"), None
    raise ConfigurationError(f"config key {key!r}: expected a preset name or a mapping with x and y")


def _stream(cfg, length, seed):
    """Observed stream and the preset calibration (if any) for detect/baseline."""
    sources = [k for k in ("preset", "scores", "stream_x") if cfg.get(k) is not None]
    if len(sources) != 1:
        raise ConfigurationError("give exactly one stream source: 'preset', 'scores' or 'stream_x'/'stream_y'")
    if "scores" in sources:
        table = load_scores(_get(cfg, "scores", str))
        stream = table.paired()
        return stream, None
    if "preset" in sources:
        sx, sy, cal = stream_preset(_get(cfg, "preset", str))
    else:
        if cfg.get("stream_y") is None:
            raise ConfigurationError("'stream_x' needs a matching 'stream_y'")
        sx, sy, cal = _spec(cfg["stream_x"], "stream_x"), _spec(cfg["stream_y"], "stream_y"), None
    if length is None:
        raise ConfigurationError("generated streams need a finite 'time_budget'")
    return generate(sx.with_seed(seed), sy.with_seed(seed), length), cal


def _d_policy(cfg, cal):
    kind = cfg.get("d_policy", "constant")
    if isinstance(kind, list):
        return DPolicy.per_step(kind)
    if kind == "estimate_from_prefix":
        return DPolicy.estimate_from_prefix(_get(cfg, "prefix", int, 10))
    if kind != "constant":
        raise ConfigurationError(f"config key 'd_policy': unknown value {kind!r}")
    d = _get(cfg, "d", float)
    if d is None:
        if cal is None:
            raise ConfigurationError("missing required config key 'd'")
        d = cal.d
    return DPolicy.constant(d)


def _detector_config(cfg, cal, seed, alpha_default=None):
    mode = _get(cfg, "mode", str, "composite")
    alpha = _get(cfg, "alpha", float, alpha_default)
    if alpha is None:
        raise ConfigurationError("missing required config key 'alpha'")
    eps = _get(cfg, "epsilon", float)
    if eps is None:
        eps = cal.epsilon if (cal is not None and mode == "composite") else 0.0
    kwargs = {}
    if "gamma" in cfg:
        kwargs["gamma"] = _get(cfg, "gamma", float)
    return DetectorConfig(
        alpha=alpha,
        d_policy=_d_policy(cfg, cal),
        mode=mode,
        epsilon=eps,
        time_budget=_time_budget(cfg),
        seed=seed,
        violation_policy=_get(cfg, "violation_policy", str, "flag_and_continue"),
        **kwargs,
    )


def _permutation_config(cfg, seed, eps_default=0.0, alpha_default=None):
    alpha = _get(cfg, "alpha", float, alpha_default)
    if alpha is None:
        raise ConfigurationError("missing required config key 'alpha'")
    return PermutationConfig(
        batch_size=_require(cfg, "batch_size", int),
        alpha=alpha,
        n_permutations=_get(cfg, "n_permutations", int, 2000),
        correction=_get(cfg, "correction", str, "none"),
        epsilon=_get(cfg, "epsilon", float, eps_default),
        seed=seed,
        time_budget=_time_budget(cfg) or 500,
    )


def _write_json(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_trajectory_csv(path, outcome):
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [("t", outcome.steps), ("g", outcome.g), ("d", outcome.d)]
    for name in ("wealth", "theta", "wealth_b", "theta_b"):
        arr = getattr(outcome, name)
        if arr is not None:
            cols.append((name, arr))
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c for c, _ in cols])
        for row in zip(*(a for _, a in cols)):
            w.writerow([str(int(row[0]))] + [repr(float(v)) for v in row[1:]])
    return path


# -- commands ------------------------------------------------------------------


def cmd_detect(cfg, out_dir, seed, fmt):
    T = _time_budget(cfg)
    stream, cal = _stream(cfg, T, seed)
    dcfg = _detector_config(cfg, cal, seed)
    outcome = run_detector(dcfg, stream)
    data = outcome.to_dict()
    data["config"] = dcfg.to_dict()
    paths = []
    if fmt in ("json", "both"):
        paths.append(_write_json(out_dir / "outcome.json", data))
    if fmt in ("csv", "both"):
        paths.append(_write_trajectory_csv(out_dir / "trajectory.csv", outcome))
    print(f"decision: {outcome.decision}")
    print(f"tau: {outcome.rejection_time}")
    if outcome.wealth is not None and len(outcome.wealth):
        if outcome.wealth_b is None:
            print(f"final wealth: {outcome.wealth[-1]:.6g} (threshold {dcfg.threshold:.6g})")
        else:
            print(
                f"final wealth: A={outcome.wealth[-1]:.6g} B={outcome.wealth_b[-1]:.6g}"
                f" (threshold {dcfg.threshold:.6g})"
            )
    if outcome.violations:
        print(f"flagged steps: {len(outcome.violations)}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_baseline(cfg, out_dir, seed, fmt):
    T = _time_budget(cfg) or 500
    stream, cal = _stream(cfg, T, seed)
    pcfg = _permutation_config(cfg, seed, eps_default=cal.epsilon if cal else 0.0)
    outcome = batched_permutation_run(pcfg, stream, T)
    data = outcome.to_dict()
    data["config"] = pcfg.to_dict()
    path = _write_json(out_dir / "baseline.json", data)
    print(f"decision: {outcome.decision}")
    print(f"tau: {outcome.rejection_time}")
    print("batch  delta_obs  p_value  threshold")
    for b in outcome.batches:
        p = "gated" if b["p_value"] is None else f"{b['p_value']:.4f}"
        print(f"{b['index']:5d}  {b['delta_obs']:9.4f}  {p:>7}  {b['threshold']:.6g}")
    print(f"wrote {path}")
    return 0


def _pool(cfg, key):
    path = _require(cfg, key, str)
    return load_scores(path).column(_get(cfg, "column", str, "score"))


def cmd_calibrate(cfg, out_dir, seed, fmt):
    method = _get(cfg, "calibration", str, "oracle" if cfg.get("pool_b") is not None else "estimated")
    if method == "oracle":
        a, b = _pool(cfg, "pool"), _pool(cfg, "pool_b")
        eps = oracle_epsilon(a, b)
        if cfg.get("scores") is not None:
            paired = load_scores(_get(cfg, "scores", str))
            d = oracle_d(paired.column("score_x"), paired.column("score_y"))
        else:
            d = oracle_d(a, b)
        result = CalibrationResult(eps, d, "oracle", len(a) + len(b))
    elif method == "estimated":
        pool = _pool(cfg, "pool")
        need = _get(cfg, "pool_size", int, 20)
        if len(pool) < need:
            raise InputDataError(f"estimated calibration needs at least {need} pool scores, got {len(pool)}")
        human = pool[:need]
        rng = substream(seed, STREAM_CALIBRATION)
        eps = estimate_epsilon(human, _get(cfg, "shuffles", int, 1000), rng)
        n = _get(cfg, "prefix", int, 10)
        if cfg.get("scores") is not None:
            paired = load_scores(_get(cfg, "scores", str))
            d = estimate_d(paired.column("score_x"), paired.column("score_y"), n)
        else:
            half = need // 2
            d = estimate_d(human[:half], human[half:], min(n, half))
        result = CalibrationResult(eps, d, "estimated", need)
    else:
        raise ConfigurationError(f"config key 'calibration': expected oracle or estimated, got {method!r}")
    path = _write_json(out_dir / "calibration.json", result.to_dict())
    print(f"provenance: {result.provenance}")
    print(f"epsilon: {result.epsilon:.6g}")
    print(f"d: {result.d:.6g}")
    print(f"wrote {path}")
    return 0


def _grid(cfg):
    if cfg.get("alpha") is not None:
        return AlphaGrid((_get(cfg, "alpha", float),))
    g = cfg.get("grid")
    if g is None:
        return AlphaGrid()
    if isinstance(g, list):
        return AlphaGrid(tuple(float(v) for v in g))
    if isinstance(g, dict):
        try:
            return AlphaGrid.linspace(float(g.get("lo", 0.005)), float(g.get("hi", 0.1)), int(g.get("n", 20)))
        except (TypeError, ValueError):
            raise ConfigurationError(f"config key 'grid': bad value {g!r}") from None
    raise ConfigurationError(f"config key 'grid': expected a list or a lo/hi/n mapping, got {g!r}")


def cmd_evaluate(cfg, out_dir, seed, fmt):
    h0 = _pair(cfg["h0"], "h0") if cfg.get("h0") is not None else None
    h1 = _pair(cfg["h1"], "h1") if cfg.get("h1") is not None else None
    if h0 is None and h1 is None:
        raise ConfigurationError("missing required config key 'h1' (or 'h0')")
    cal = next((p[2] for p in (h1, h0) if p is not None and p[2] is not None), None)
    grid = _grid(cfg)
    first_alpha = grid.values[0] if grid.values else 0.05
    method = _get(cfg, "method", str, "betting")
    if method == "betting":
        run_cfg = _detector_config(cfg, cal, 0, alpha_default=first_alpha)
    elif method == "permutation":
        run_cfg = _permutation_config(cfg, 0, cal.epsilon if cal else 0.0, alpha_default=first_alpha)
    else:
        raise ConfigurationError(f"config key 'method': expected betting or permutation, got {method!r}")
    eps_est = None
    if cfg.get("epsilon_pool") is not None:
        sx = _pair(cfg["epsilon_pool"], "epsilon_pool")[0]
        eps_est = EpsilonEstimation(sx, _get(cfg, "pool_size", int, 20), _get(cfg, "shuffles", int, 1000))
    report = monte_carlo(
        run_cfg,
        None if h0 is None else h0[:2],
        None if h1 is None else h1[:2],
        runs=_get(cfg, "runs", int, 1000),
        grid=grid,
        master_seed=seed,
        workers=_get(cfg, "workers", int, 1),
        epsilon_estimation=eps_est,
    )
    paths = emit_report(report, out_dir, "both" if fmt is None else fmt)

    def cell(v, spec):
        return "-" if v is None else format(v, spec)

    print(f"runs per level: {report.runs}   flagged runs: {report.violation_count}")
    if report.ratio is not None:
        print(f"ratio: {report.ratio:.4f}")
    print("   alpha      fpr  mean_tau  declared_h1")
    for alpha, fpr, tau, frac in report.per_alpha:
        print(f"{alpha:8.4f} {cell(fpr, '8.4f'):>8} {cell(tau, '9.2f'):>9} {cell(frac, '12.4f'):>12}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_presets(cfg, out_dir, seed, fmt):
    print(f"{'name':36s} {'gap':>8s} {'epsilon':>8s} {'d':>8s}  description")
    for name in list_presets():
        info = preset_info(name)
        print(f"{name:36s} {info.gap:8.4f} {info.epsilon:8.4f} {info.d:8.4f}  {info.description}")
    return 0


COMMANDS = {
    "detect": (cmd_detect, "run one sequential test on a score stream"),
    "calibrate": (cmd_calibrate, "compute epsilon and d from score pools"),
    "baseline": (cmd_baseline, "run the batched permutation baseline"),
    "evaluate": (cmd_evaluate, "Monte Carlo FPR and rejection-time evaluation"),
    "presets": (cmd_presets, "list built-in stream presets"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="betdetect", description="Sequential detection of score-stream shifts by betting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="seed (master seed for evaluate)")
        p.add_argument("--output-dir", help=f"where artifacts go (default ${OUTPUT_DIR_ENV} or .)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--format", choices=("json", "csv"), help="artifact format")
    return parser


def run(argv=None):
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, args.set)
        _check_keys(cfg, args.command)
        seed = args.seed if args.seed is not None else _get(cfg, "seed", int, 0)
        out = args.output_dir or _get(cfg, "output_dir", str) or os.environ.get(OUTPUT_DIR_ENV) or "."
        fmt = args.format or _get(cfg, "format", str)
        if fmt is not None and fmt not in ("json", "csv", "both"):
            raise ConfigurationError(f"config key 'format': expected json or csv, got {fmt!r}")
        if args.command == "detect":
            fmt = fmt or "json"
        return func(cfg, Path(out), seed, fmt)
    except BetDetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
