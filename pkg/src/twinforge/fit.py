"""Distribution fitting from observed samples and binding onto graph parameters.

Fits are maximum likelihood. Gamma uses Newton iterations on the shape
(method-of-moments start, tolerance 1e-8, at most 100 steps); every other
family has a closed form. Normal and lognormal use the biased (1/n) variance.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
from scipy import special, stats

from .model import (
    FAMILY_ORDER,
    PARAM_NAMES,
    PARAM_SCHEMA,
    DistSpec,
    Family,
    GraphBuilder,
    ModelGraph,
)


class FitError(ValueError):
    pass


class UnsupportedData(FitError):
    pass


class NoViableFit(FitError):
    pass


class BindConflict(ValueError):
    pass


GAMMA_TOL = 1e-8
GAMMA_MAX_ITER = 100

_POSITIVE = {Family.LOGNORMAL, Family.GAMMA}
_SPREAD = {Family.NORMAL, Family.LOGNORMAL, Family.UNIFORM, Family.GAMMA}


@dataclass(frozen=True)
class SampleSet:
    values: tuple[float, ...]
    source_name: str = ""
    window: tuple[float, float] | None = None
    times: tuple[float, ...] | None = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise FitError("a sample set needs at least one value")
        if not all(math.isfinite(v) for v in vals):
            raise FitError("sample values must be finite")
        if self.times is not None and len(self.times) != len(vals):
            raise FitError("times and values differ in length")
        object.__setattr__(self, "values", vals)

    def windowed(self) -> "SampleSet":
        """Keep only values observed inside ``window`` (needs ``times``)."""
        if self.window is None or self.times is None:
            return self
        t0, t1 = self.window
        keep = [(t, v) for t, v in zip(self.times, self.values) if t0 <= t <= t1]
        if not keep:
            raise FitError(f"no samples of {self.source_name!r} inside window {self.window}")
        return SampleSet(tuple(v for _, v in keep), self.source_name, None, tuple(t for t, _ in keep))


@dataclass(frozen=True)
class FitResult:
    family: Family
    params: tuple[float, ...]
    loglik: float
    aic: float
    ks_stat: float
    n: int
    degenerate: bool = False

    @property
    def dist(self) -> DistSpec:
        return DistSpec(self.family, self.params)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "params": dict(zip(PARAM_NAMES[self.family], self.params)),
            "loglik": self.loglik,
            "aic": self.aic,
            "ks_stat": self.ks_stat,
            "n": self.n,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FitResult":
        family = Family(d["family"])
        params = tuple(float(d["params"][k]) for k in PARAM_NAMES[family])
        return cls(family, params, d["loglik"], d["aic"], d["ks_stat"], d["n"], d.get("degenerate", False))


def _frozen(dist: DistSpec):
    f, p = dist.family, dist.params
    if f is Family.EXPONENTIAL:
        return stats.expon(scale=1.0 / p[0])
    if f is Family.NORMAL:
        return stats.norm(p[0], p[1])
    if f is Family.LOGNORMAL:
        return stats.lognorm(s=p[1], scale=math.exp(p[0]))
    if f is Family.UNIFORM:
        return stats.uniform(loc=p[0], scale=p[1] - p[0])
    return stats.gamma(a=p[0], scale=p[1])


def cdf(dist: DistSpec, x: np.ndarray) -> np.ndarray:
    if dist.family is Family.DETERMINISTIC:
        return (x >= dist.params[0]).astype(float)
    return _frozen(dist).cdf(x)


def ks_statistic(x: Iterable[float], dist: DistSpec) -> float:
    """Two-sided one-sample Kolmogorov-Smirnov distance to a fitted CDF."""
    xs = np.sort(np.asarray(list(x), dtype=float))
    n = len(xs)
    if dist.family is Family.DETERMINISTIC:
        c = dist.params[0]
        return max(float(np.mean(xs < c)), float(np.mean(xs > c)))
    f = cdf(dist, xs)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    return min(1.0, max(0.0, d))


def loglik(x: np.ndarray, dist: DistSpec) -> float:
    f, p = dist.family, dist.params
    n = len(x)
    if f is Family.DETERMINISTIC:
        return 0.0 if np.all(x == p[0]) else -math.inf
    if f is Family.EXPONENTIAL:
        if np.any(x < 0):
            return -math.inf
        return n * math.log(p[0]) - p[0] * float(x.sum())
    if f is Family.NORMAL:
        if p[1] == 0:
            return -math.inf
        return float(-0.5 * n * math.log(2 * math.pi * p[1] ** 2) - ((x - p[0]) ** 2).sum() / (2 * p[1] ** 2))
    if f is Family.LOGNORMAL:
        if np.any(x <= 0) or p[1] == 0:
            return -math.inf
        y = np.log(x)
        return float(-0.5 * n * math.log(2 * math.pi * p[1] ** 2) - ((y - p[0]) ** 2).sum() / (2 * p[1] ** 2) - y.sum())
    if f is Family.UNIFORM:
        if p[1] == p[0] or np.any(x < p[0]) or np.any(x > p[1]):
            return -math.inf
        return -n * math.log(p[1] - p[0])
    k, theta = p
    if np.any(x <= 0):
        return -math.inf
    return float(((k - 1) * np.log(x) - x / theta).sum() - n * (k * math.log(theta) + special.gammaln(k)))


def _gamma_shape(x: np.ndarray) -> float:
    mean = float(x.mean())
    s = math.log(mean) - float(np.log(x).mean())
    k = mean**2 / float(x.var())
    for _ in range(GAMMA_MAX_ITER):
        g = math.log(k) - special.digamma(k) - s
        dg = 1.0 / k - special.polygamma(1, k)
        step = g / dg
        k_new = k - step
        if k_new <= 0:
            k_new = k / 2
        if abs(k_new - k) <= GAMMA_TOL * max(1.0, k):
            return k_new
        k = k_new
    return k


def _estimate(x: np.ndarray, family: Family) -> tuple[float, ...]:
    if family is Family.DETERMINISTIC:
        return (float(x[0]) if np.all(x == x[0]) else float(x.mean()),)
    if family is Family.EXPONENTIAL:
        return (1.0 / float(x.mean()),)
    if family is Family.NORMAL:
        return (float(x.mean()), float(x.std()))
    if family is Family.LOGNORMAL:
        y = np.log(x)
        return (float(y.mean()), float(y.std()))
    if family is Family.UNIFORM:
        return (float(x.min()), float(x.max()))
    k = _gamma_shape(x)
    return (k, float(x.mean()) / k)


def _result(x: np.ndarray, dist: DistSpec, degenerate: bool = False) -> FitResult:
    ll = loglik(x, dist)
    k = len(dist.params)
    return FitResult(dist.family, dist.params, ll, 2 * k - 2 * ll, ks_statistic(x, dist), len(x), degenerate)


def fit_family(samples: SampleSet | Iterable[float], family: Family | str) -> FitResult:
    """Maximum-likelihood fit of one family.

    Constant data for a family that needs spread comes back as a flagged
    deterministic fit rather than an error.
    """
    family = Family(family)
    values = samples.windowed().values if isinstance(samples, SampleSet) else tuple(samples)
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        raise UnsupportedData("no samples")
    if len(PARAM_NAMES[family]) >= 2 and len(x) < 2:
        raise UnsupportedData(f"{family.value} needs at least 2 samples")
    if family in _POSITIVE and np.any(x <= 0):
        raise UnsupportedData(f"{family.value} needs strictly positive samples")
    if family is Family.EXPONENTIAL and (np.any(x < 0) or x.mean() <= 0):
        raise UnsupportedData("exponential needs non-negative samples with positive mean")
    if np.all(x == x[0]) and (family in _SPREAD or family is Family.DETERMINISTIC):
        return _result(x, DistSpec.deterministic(float(x[0])), degenerate=family is not Family.DETERMINISTIC)
    return _result(x, DistSpec(family, _estimate(x, family)))


def select_fit(
    samples: SampleSet | Iterable[float],
    families: Iterable[Family | str] = FAMILY_ORDER,
    criterion: str = "aic",
) -> FitResult:
    """Best fit under AIC or KS; ties go to fewer parameters, then family order."""
    families = [Family(f) for f in families]
    if not families:
        raise ValueError("no candidate families")
    if criterion.lower() not in ("aic", "ks"):
        raise ValueError(f"unknown criterion {criterion!r}")
    samples = list(samples.windowed().values) if isinstance(samples, SampleSet) else list(samples)
    fits = []
    for f in families:
        try:
            fits.append((f, fit_family(samples, f)))
        except FitError:
            continue
    if not fits:
        raise NoViableFit("no candidate family could be fitted")

    def key(item):
        f, r = item
        score = r.aic if criterion.lower() == "aic" else r.ks_stat
        return (score, len(r.params), FAMILY_ORDER.index(f))

    return min(fits, key=key)[1]


# ---------------------------------------------------------------- binding


@dataclass(frozen=True)
class BindingEntry:
    source_name: str
    node_id: str
    param_name: str


@dataclass(frozen=True)
class BindingPlan:
    entries: tuple[BindingEntry, ...] = ()
    unmatched: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "entries": [vars(e) for e in self.entries],
            "unmatched": list(self.unmatched),
        }


def _target(graph: ModelGraph, spec: str | tuple[str, str]) -> tuple[str, str] | None:
    if isinstance(spec, tuple):
        ent, param = spec
    else:
        if "." not in spec:
            return None
        ent, param = spec.rsplit(".", 1)
    item = graph.nodes.get(ent) or graph.edges.get(ent)
    if item is None or param not in PARAM_SCHEMA[item.kind]:
        return None
    return ent, param


def bind(
    graph: ModelGraph,
    fits: Mapping[str, FitResult],
    overrides: Mapping[str, str | tuple[str, str]] | None = None,
) -> tuple[ModelGraph, BindingPlan]:
    """Replace parameters with fitted distributions.

    A source named ``<id>.<param>`` binds to that parameter by exact id.
    ``overrides`` map a source name to an explicit ``"<id>.<param>"`` target
    and win over the name rule. Only parameter values change.
    """
    overrides = dict(overrides or {})
    claims: dict[tuple[str, str], list[str]] = {}
    unmatched: list[str] = []
    for src in sorted(overrides):
        if src not in fits:
            continue
        t = _target(graph, overrides[src])
        if t is None:
            unmatched.append(src)
        else:
            claims.setdefault(t, []).append(src)
    for t, srcs in claims.items():
        if len(srcs) > 1:
            raise BindConflict(f"{', '.join(srcs)} all target {t[0]}.{t[1]}")
    overridden = set(claims)
    defaults: dict[tuple[str, str], list[str]] = {}
    for src in sorted(fits):
        if src in overrides:
            continue
        t = _target(graph, src)
        if t is None or t in overridden:
            unmatched.append(src)
        else:
            defaults.setdefault(t, []).append(src)
    for t, srcs in defaults.items():
        if len(srcs) > 1:
            raise BindConflict(f"{', '.join(srcs)} all target {t[0]}.{t[1]}")
        claims[t] = srcs

    b = GraphBuilder.from_graph(graph)
    entries = []
    for (ent, param), (src,) in sorted(claims.items()):
        value = fits[src].dist
        if ent in b.nodes:
            n = b.nodes[ent]
            b.nodes[ent] = replace(n, params={**n.params, param: value})
        else:
            e = b.edges[ent]
            b.edges[ent] = replace(e, params={**e.params, param: value})
        entries.append(BindingEntry(src, ent, param))
    entries.sort(key=lambda e: e.source_name)
    return b.build(), BindingPlan(tuple(entries), tuple(sorted(unmatched)))


# ---------------------------------------------------------------- I/O


def read_samples(text: str, name: str | None = None) -> dict[str, SampleSet]:
    """Parse ``source_name,value[,time]`` rows, or a single value column named ``name``.

    A header row is skipped when its value field is not numeric.
    """
    values: dict[str, list[float]] = {}
    times: dict[str, list[float]] = {}
    for row in csv.reader(io.StringIO(text)):
        row = [c.strip() for c in row]
        if not row or not any(row) or row[0].startswith("#"):
            continue
        if len(row) == 1:
            if name is None:
                raise FitError("single-column samples need a source name")
            src, raw, t = name, row[0], None
        else:
            src, raw = row[0], row[1]
            t = row[2] if len(row) > 2 else None
        if not _numeric(raw):
            if not values:
                continue  # header
            raise FitError(f"non-numeric sample value {raw!r}")
        values.setdefault(src, []).append(float(raw))
        if t is not None and _numeric(t):
            times.setdefault(src, []).append(float(t))
    out = {}
    for src, vals in values.items():
        ts = times.get(src)
        out[src] = SampleSet(tuple(vals), src, None, tuple(ts) if ts and len(ts) == len(vals) else None)
    return out


def _numeric(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def fits_json(fits: Mapping[str, FitResult]) -> str:
    return json.dumps({k: v.to_dict() for k, v in sorted(fits.items())}, indent=2)


def fits_from_json(text: str) -> dict[str, FitResult]:
    return {k: FitResult.from_dict(v) for k, v in json.loads(text).items()}
