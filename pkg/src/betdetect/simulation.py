"""Score streams: containers, synthetic generators, CSV files and presets.

A stream pairs a reference human score ``x_t`` with a score ``y_t`` from
the source under test.  Streams are either generated from a
``StreamSpec`` (Gaussian, empirical resampling, segment mixtures, i.i.d.
blends) or read from a paired CSV file.

Score files are UTF-8 CSV with a header row.  Paired files carry the
columns ``score_x`` and ``score_y``; pool files carry a single ``score``
column.  Values are written with ``repr`` so a write/read round trip is
exact.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from . import _tables
from .calibration import CalibrationResult
from .errors import InputDataError, PresetNotFoundError, ScoreFileError
from .rng import STREAM_X, STREAM_Y, substream


class ScoreObservation(NamedTuple):
    t: int
    score_x: float
    score_y: float


class ScoreStream:
    """Paired score arrays; indexable as a sequence of ``ScoreObservation``."""

    def __init__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape:
            raise InputDataError(f"x and y must be 1-d of equal length, got {x.shape} and {y.shape}")
        self.x = x
        self.y = y

    def __len__(self):
        return len(self.x)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return ScoreStream(self.x[i], self.y[i])
        if i < 0:
            i += len(self)
        return ScoreObservation(i + 1, float(self.x[i]), float(self.y[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def swapped(self):
        return ScoreStream(self.y, self.x)

    def __repr__(self):
        return f"ScoreStream(n={len(self)})"


def as_stream(obj):
    """Coerce a ``ScoreStream`` or a sequence of observations/(t, x, y) tuples."""
    if isinstance(obj, ScoreStream):
        return obj
    obs = list(obj)
    ts = [int(o[0]) for o in obs]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise InputDataError("observation times must be strictly increasing")
    return ScoreStream([o[1] for o in obs], [o[2] for o in obs])


# -- stream specifications ---------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sd: float
    clip: Optional[tuple] = None

    def __post_init__(self):
        if not self.sd >= 0:
            raise InputDataError(f"sd must be >= 0, got {self.sd}")
        if self.clip is not None and not self.clip[0] < self.clip[1]:
            raise InputDataError(f"clip needs lo < hi, got {self.clip}")


@dataclass(frozen=True)
class Empirical:
    values: Optional[tuple] = None
    path: Optional[str] = None
    column: str = "score"
    resample: str = "with_replacement"

    def __post_init__(self):
        if (self.values is None) == (self.path is None):
            raise InputDataError("empirical spec needs exactly one of values or path")
        if self.resample not in ("with_replacement", "without_replacement"):
            raise InputDataError(f"unknown resample mode {self.resample!r}")

    def pool(self):
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return load_scores(self.path).column(self.column)


@dataclass(frozen=True)
class Mixture:
    """Consecutive segments; segment ``j`` covers its declared number of steps."""

    segments: tuple  # of (length, StreamSpec)

    def __post_init__(self):
        if not self.segments:
            raise InputDataError("mixture needs at least one segment")
        for length, _ in self.segments:
            if length < 1:
                raise InputDataError(f"mixture segment length must be >= 1, got {length}")


@dataclass(frozen=True)
class Blend:
    """Each observation drawn i.i.d. from a component chosen with ``weights``."""

    components: tuple  # of StreamSpec
    weights: tuple

    def __post_init__(self):
        if len(self.components) != len(self.weights) or not self.components:
            raise InputDataError("blend needs one weight per component")
        if any(w < 0 for w in self.weights) or not sum(self.weights) > 0:
            raise InputDataError("blend weights must be nonnegative and not all zero")


@dataclass(frozen=True)
class FilePaired:
    """Scores read in order from a paired CSV file (``score_x`` or ``score_y`` by side)."""

    path: str


@dataclass(frozen=True)
class StreamSpec:
    kind: object
    seed: int = 0

    @classmethod
    def gaussian(cls, mean, sd, clip=None, seed=0):
        return cls(Gaussian(float(mean), float(sd), None if clip is None else tuple(map(float, clip))), seed)

    @classmethod
    def empirical(cls, values=None, path=None, column="score", resample="with_replacement", seed=0):
        vals = None if values is None else tuple(float(v) for v in values)
        return cls(Empirical(vals, None if path is None else str(path), column, resample), seed)

    @classmethod
    def mixture(cls, segments, seed=0):
        return cls(Mixture(tuple((int(n), s) for n, s in segments)), seed)

    @classmethod
    def blend(cls, components, weights=None, seed=0):
        components = tuple(components)
        if weights is None:
            weights = (1.0,) * len(components)
        return cls(Blend(components, tuple(float(w) for w in weights)), seed)

    @classmethod
    def file_paired(cls, path, seed=0):
        return cls(FilePaired(str(path)), seed)

    def with_seed(self, seed):
        return StreamSpec(self.kind, int(seed))

    def mean(self):
        """Population mean when it is known in closed form, else ``None``."""
        k = self.kind
        if isinstance(k, Gaussian):
            if k.clip is None or math.isclose(k.clip[0] + k.clip[1], 2 * k.mean, abs_tol=1e-12):
                return k.mean
            return None
        if isinstance(k, Blend):
            means = [c.mean() for c in k.components]
            if any(m is None for m in means):
                return None
            return float(np.dot(means, k.weights) / sum(k.weights))
        if isinstance(k, Mixture):
            means = [s.mean() for _, s in k.segments]
            if any(m is None for m in means):
                return None
            lengths = [n for n, _ in k.segments]
            return float(np.dot(means, lengths) / sum(lengths))
        if isinstance(k, Empirical):
            return float(np.mean(k.pool()))
        return None

    def to_dict(self):
        k = self.kind
        if isinstance(k, Gaussian):
            body = {"kind": "gaussian", "mean": k.mean, "sd": k.sd, "clip": None if k.clip is None else list(k.clip)}
        elif isinstance(k, Empirical):
            body = {"kind": "empirical", "values": None if k.values is None else list(k.values),
                    "path": k.path, "column": k.column, "resample": k.resample}
        elif isinstance(k, Mixture):
            body = {"kind": "mixture", "segments": [[n, s.to_dict()] for n, s in k.segments]}
        elif isinstance(k, Blend):
            body = {"kind": "blend", "components": [c.to_dict() for c in k.components], "weights": list(k.weights)}
        else:
            body = {"kind": "file_paired", "path": k.path}
        body["seed"] = self.seed
        return body

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind")
        seed = int(data.get("seed", 0))
        if kind == "gaussian":
            return cls.gaussian(data["mean"], data.get("sd", 0.0), data.get("clip"), seed)
        if kind == "empirical":
            return cls.empirical(data.get("values"), data.get("path"), data.get("column", "score"),
                                 data.get("resample", "with_replacement"), seed)
        if kind == "mixture":
            return cls.mixture([(n, cls.from_dict(s)) for n, s in data["segments"]], seed)
        if kind == "blend":
            return cls.blend([cls.from_dict(c) for c in data["components"]], data.get("weights"), seed)
        if kind == "file_paired":
            return cls.file_paired(data["path"], seed)
        raise InputDataError(f"unknown stream kind {kind!r}")


def _sample(spec, rng, n, side):
    k = spec.kind
    if isinstance(k, Gaussian):
        out = rng.normal(k.mean, k.sd, n)
        if k.clip is not None:
            np.clip(out, k.clip[0], k.clip[1], out=out)
        return out
    if isinstance(k, Empirical):
        pool = k.pool()
        if pool.size == 0:
            raise InputDataError("empirical pool is empty")
        if k.resample == "with_replacement":
            return rng.choice(pool, n, replace=True)
        if n > pool.size:
            raise InputDataError(f"without-replacement pool has {pool.size} values, need {n}")
        return rng.permutation(pool)[:n]
    if isinstance(k, Mixture):
        total = sum(length for length, _ in k.segments)
        if n > total:
            raise InputDataError(f"mixture covers {total} steps, need {n}")
        parts, left = [], n
        for length, seg in k.segments:
            take = min(length, left)
            if take == 0:
                break
            parts.append(_sample(seg, rng, take, side))
            left -= take
        return np.concatenate(parts)
    if isinstance(k, Blend):
        p = np.asarray(k.weights, dtype=float)
        idx = rng.choice(len(k.components), n, p=p / p.sum())
        out = np.empty(n)
        for j, comp in enumerate(k.components):
            mask = idx == j
            out[mask] = _sample(comp, rng, int(mask.sum()), side)
        return out
    if isinstance(k, FilePaired):
        col = load_scores(k.path).column("score_x" if side == "x" else "score_y")
        if n > col.size:
            raise InputDataError(f"{k.path} has {col.size} rows, need {n}")
        return col[:n].copy()
    raise InputDataError(f"unknown stream kind {type(k).__name__}")


def generate(spec_x, spec_y, length):
    """Draw ``length`` paired observations.

    The x side uses substream ``STREAM_X`` of ``spec_x.seed`` and the y side
    substream ``STREAM_Y`` of ``spec_y.seed``, so equal seeds on both sides
    still give independent draws.
    """
    if length < 1:
        raise InputDataError(f"length must be >= 1, got {length}")
    x = _sample(spec_x, substream(spec_x.seed, STREAM_X), length, "x")
    y = _sample(spec_y, substream(spec_y.seed, STREAM_Y), length, "y")
    return ScoreStream(x, y)


# -- score files ---------------------------------------------------------------


class ScoreTable:
    def __init__(self, columns, path=None):
        self.columns = columns
        self.path = path

    @property
    def names(self):
        return list(self.columns)

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column(self, name):
        try:
            return self.columns[name]
        except KeyError:
            raise ScoreFileError(f"missing column {name!r} (have {self.names})", self.path) from None

    def __getitem__(self, name):
        return self.column(name)

    def paired(self):
        return ScoreStream(self.column("score_x"), self.column("score_y"))


def load_scores(path, format="csv"):
    """Read a score file into a ``ScoreTable`` with columns addressable by header."""
    if format != "csv":
        raise ScoreFileError(f"unsupported format {format!r}", path)
    p = Path(path)
    if not p.is_file():
        raise ScoreFileError("no such file", str(path))
    with p.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise ScoreFileError("empty file (header row required)", str(path), 1)
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ScoreFileError(f"duplicate column names in header {header}", str(path), 1)
    data = [[] for _ in header]
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ScoreFileError(f"expected {len(header)} fields, got {len(row)}", str(path), lineno)
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ScoreFileError(f"cannot parse {cell!r} as a number", str(path), lineno) from None
            if not math.isfinite(v):
                raise ScoreFileError(f"non-finite value {cell!r}", str(path), lineno)
            data[j].append(v)
    if not data[0]:
        raise ScoreFileError("no data rows", str(path), 2)
    return ScoreTable({h: np.asarray(col, dtype=float) for h, col in zip(header, data)}, str(path))


def write_scores(path, columns):
    """Write ``{name: values}`` as a score CSV with full-precision values."""
    names = list(columns)
    cols = [np.asarray(columns[n], dtype=float) for n in names]
    if len({c.size for c in cols}) > 1:
        raise InputDataError("all columns must have the same length")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def write_stream(path, stream):
    stream = as_stream(stream)
    write_scores(path, {"score_x": stream.x, "score_y": stream.y})


# -- presets -------------------------------------------------------------------


# keeps |x - y| strictly inside d despite rounding at the clip edges
_CLIP_MARGIN = 1e-9


def _design(components, seed=0):
    """Clipped Gaussian x/y specs for a list of ``(gap, d)`` y-components.

    Each component gets ``sd = d/6`` and is clipped symmetrically at
    ``gap +- ((d - gap)/2 - margin)``; x is centred at 0 with the tightest of those
    half-widths, so ``|x - y| <= d`` always holds for every component.
    """
    halves = [(d - abs(gap)) / 2.0 - _CLIP_MARGIN * d for gap, d in components]
    h_x = min(halves)
    sd_x = min(d for _, d in components) / 6.0
    spec_x = StreamSpec.gaussian(0.0, sd_x, (-h_x, h_x), seed)
    ys = [StreamSpec.gaussian(gap, d / 6.0, (gap - h, gap + h), seed) for (gap, d), h in zip(components, halves)]
    return spec_x, ys


def bounded_gaussian_pair(gap, d, seed=0):
    """``(spec_x, spec_y)`` with mean gap ``gap`` and ``|x - y| <= d``, built like the presets."""
    if not (math.isfinite(d) and d > 0 and abs(gap) < d):
        raise InputDataError(f"need |gap| < d, got gap={gap}, d={d}")
    spec_x, (spec_y,) = _design([(float(gap), float(d))], seed)
    return spec_x, spec_y


@dataclass(frozen=True)
class PresetInfo:
    name: str
    description: str
    gap: float
    epsilon: float
    d: float


def _table_entry(model, fn, source):
    j = _tables.SOURCES.index(source)
    delta = _tables.DELTA[model][fn]
    bound = _tables.BOUND[model][fn]
    return delta[2 * j], delta[2 * j + 1], bound[2 * j], bound[2 * j + 1]


def _single(model, fn, source, h0):
    gap1, gap0, d1, d0 = _table_entry(model, fn, source)
    gap, d = (gap0, d0) if h0 else (gap1, d1)
    spec_x, (spec_y,) = _design([(gap, d)])
    hyp = "human vs human" if h0 else f"human vs {source}"
    info = PresetInfo(f"{fn}-{model}-{source}" + ("/h0" if h0 else ""), f"{fn} scored by {model}, {hyp}",
                      gap, gap0, d)
    return spec_x, spec_y, info


def _avg(model, fn, h0):
    entries = [_table_entry(model, fn, s) for s in _tables.SOURCES]
    eps = sum(e[1] for e in entries) / len(entries)
    if h0:
        d = max(e[3] for e in entries)
        spec_x, (spec_y,) = _design([(eps, d)])
        gap = eps
    else:
        comps = [(e[0], e[2]) for e in entries]
        d = max(c[1] for c in comps)
        spec_x, ys = _design(comps)
        spec_y = StreamSpec.blend(ys)
        gap = float(np.mean([c[0] for c in comps]))
    name = f"{fn}-{model}-avg" + ("/h0" if h0 else "")
    desc = f"{fn} scored by {model}, equal blend of {', '.join(_tables.SOURCES)}"
    return spec_x, spec_y, PresetInfo(name, desc + (" (human vs human)" if h0 else ""), gap, eps, d)


def _mixed_llms(model, fn):
    order = (("pro", 100), ("flash", 200), ("palm2", 200))
    entries = {s: _table_entry(model, fn, s) for s, _ in order}
    comps = [(entries[s][0], entries[s][2]) for s, _ in order]
    spec_x, ys = _design(comps)
    spec_y = StreamSpec.mixture([(n, y) for (_, n), y in zip(order, ys)])
    eps = sum(e[1] for e in entries.values()) / 3
    d = max(c[1] for c in comps)
    gap = sum(n * c[0] for (_, n), c in zip(order, comps)) / 500
    return spec_x, spec_y, PresetInfo(f"{fn}-{model}-mixed-llms", "100 pro, 200 flash, 200 palm2 segments", gap, eps, d)


def _mixed_source(model, fn):
    gap1, gap0, d1, d0 = _table_entry(model, fn, "palm2")
    spec_x, (y_h, y_m) = _design([(gap0, d0), (gap1, d1)])
    spec_y = StreamSpec.mixture([(200, y_h), (300, y_m)])
    gap = (200 * gap0 + 300 * gap1) / 500
    return spec_x, spec_y, PresetInfo(f"{fn}-{model}-mixed-source", "200 human then 300 palm2 segments",
                                      gap, gap0, max(d0, d1))


def _h0_identical():
    spec = StreamSpec.gaussian(0.0, 1.0, (-3.0, 3.0))
    return spec, spec, PresetInfo("h0-identical", "both streams N(0,1) clipped to [-3, 3]", 0.0, 0.0, 6.0)


def _builders():
    out = {"h0-identical": _h0_identical}
    for model in _tables.DELTA:
        for fn in _tables.SCORE_FUNCTIONS:
            for source in _tables.SOURCES:
                out[f"{fn}-{model}-{source}"] = lambda m=model, f=fn, s=source: _single(m, f, s, False)
                out[f"{fn}-{model}-{source}/h0"] = lambda m=model, f=fn, s=source: _single(m, f, s, True)
            out[f"{fn}-{model}-avg"] = lambda m=model, f=fn: _avg(m, f, False)
            out[f"{fn}-{model}-avg/h0"] = lambda m=model, f=fn: _avg(m, f, True)
            out[f"{fn}-{model}-mixed-llms"] = lambda m=model, f=fn: _mixed_llms(m, f)
            out[f"{fn}-{model}-mixed-source"] = lambda m=model, f=fn: _mixed_source(m, f)
    return out


_PRESETS = _builders()


def list_presets():
    return sorted(_PRESETS)


def preset_info(name):
    return _lookup(name)[2]


def _lookup(name):
    try:
        return _PRESETS[name]()
    except KeyError:
        raise PresetNotFoundError(f"unknown preset {name!r}") from None


def stream_preset(name):
    """Return ``(spec_x, spec_y, calibration)`` for a named preset.

    ``<score>-<model>-<source>`` is the machine-text stream for one row of
    the published tables; appending ``/h0`` gives the matching
    human-vs-human stream.  Calibration carries the oracle ``epsilon``
    (human-vs-human gap) and the tabulated bound ``d``.
    """
    spec_x, spec_y, info = _lookup(name)
    return spec_x, spec_y, CalibrationResult(info.epsilon, info.d, "oracle", 0)
