"""Uniform distribution mod 1 along integer sequences.

Tools for checking whether ``(n_k x)`` is uniformly distributed for points
``x`` drawn from a spectral measure: sampling, Weyl sums, star discrepancy
and the Davenport-Erdos-LeVeque series

    sum_N N^-3 sum_{k, j <= N} nu_hat(m (n_k - n_j)).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import measures as M
from ._parallel import default_threads
from ._validation import check_positive_int, require_keys
from .exceptions import SpecError
from .series import DEFAULT_FIT, FitConfig, SeriesVerdict, series_verdict

# ---------------------------------------------------------------------------
# Integer sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceSpec:
    """Rule for a sequence of distinct positive integers.

    Kinds
    -----
    ``arith``
        ``n_k = a + b k`` for ``k = 1, 2, ...`` (``b >= 1``, ``a + b >= 1``).
    ``explicit``
        The given values, sorted.
    ``bounded_gap``
        ``n_1`` uniform in ``[1, d]`` and i.i.d. gaps uniform in ``[1, d]``,
        drawn from ``seed``.
    """

    kind: str = "arith"
    a: int = 0
    b: int = 1
    values: tuple = ()
    d: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind == "arith":
            if int(self.b) < 1 or int(self.a) + int(self.b) < 1:
                raise SpecError("arith sequence needs b >= 1 and a + b >= 1")
        elif self.kind == "explicit":
            v = np.asarray(self.values, dtype=np.int64)
            if v.size == 0 or np.any(v < 1) or len(np.unique(v)) != len(v):
                raise SpecError("explicit sequence needs distinct positive integers")
            object.__setattr__(self, "values", tuple(int(x) for x in np.sort(v)))
        elif self.kind == "bounded_gap":
            check_positive_int(self.d, "d")
        else:
            raise SpecError(f"unknown sequence kind {self.kind!r}")

    @property
    def gap_bound(self) -> int | None:
        """Largest possible gap, or None when unknown."""
        if self.kind == "arith":
            return int(self.b)
        if self.kind == "bounded_gap":
            return int(self.d)
        v = np.asarray(self.values)
        return int(np.diff(v).max()) if len(v) > 1 else None

    @property
    def max_length(self) -> float:
        return len(self.values) if self.kind == "explicit" else math.inf

    def generate(self, N: int) -> np.ndarray:
        """First ``N`` terms as an int64 array."""
        N = check_positive_int(N, "N")
        if self.kind == "arith":
            return int(self.a) + int(self.b) * np.arange(1, N + 1, dtype=np.int64)
        if self.kind == "explicit":
            if N > len(self.values):
                raise SpecError(f"explicit sequence has only {len(self.values)} terms")
            return np.asarray(self.values[:N], dtype=np.int64)
        rng = np.random.default_rng(self.seed)
        return np.cumsum(rng.integers(1, int(self.d) + 1, size=N, dtype=np.int64))

    def to_spec(self) -> dict:
        if self.kind == "arith":
            return {"kind": "arith", "a": int(self.a), "b": int(self.b)}
        if self.kind == "explicit":
            return {"kind": "explicit", "values": list(self.values)}
        return {"kind": "bounded_gap", "d": int(self.d), "seed": int(self.seed)}

    @classmethod
    def from_spec(cls, spec, where: str = "sequence") -> "SequenceSpec":
        if not isinstance(spec, dict):
            raise SpecError(f"{where}: expected an object")
        require_keys(spec, ["kind"], where)
        kind = spec["kind"]
        try:
            if kind == "arith":
                return cls("arith", a=int(spec.get("a", 0)), b=int(spec.get("b", 1)))
            if kind == "explicit":
                require_keys(spec, ["values"], where)
                return cls("explicit", values=tuple(spec["values"]))
            if kind == "bounded_gap":
                require_keys(spec, ["d"], where)
                return cls("bounded_gap", d=int(spec["d"]), seed=int(spec.get("seed", 0)))
        except (SpecError, TypeError, ValueError) as exc:
            raise SpecError(f"{where}: {exc}") from exc
        raise SpecError(f"{where}: unknown sequence kind {kind!r}")


def difference_multiplicity(values) -> dict:
    """``V(t) = #{(k, j) : n_k - n_j = t}`` for every difference ``t != 0``."""
    v = np.asarray(values, dtype=np.int64)
    diff = (v[:, None] - v[None, :]).ravel()
    diff = diff[diff != 0]
    t, counts = np.unique(diff, return_counts=True)
    return dict(zip(t.tolist(), counts.tolist()))


def growth_exponent(values) -> float:
    """``log n_N / log N``: the exponent ``alpha`` in ``n_N = O(N^alpha)``."""
    v = np.asarray(values)
    N = len(v)
    return float(math.log(v[-1]) / math.log(N)) if N > 1 and v[-1] > 1 else 1.0


def exponent_arithmetic(alpha: float, p: float, q: float, tol: float = 1e-12) -> dict:
    """Value of ``alpha (1 - 2/p + 2/q)`` and its position relative to 1.

    Values within ``tol`` of 1 are reported as ``borderline`` and no
    conclusion is drawn from them.
    """
    val = alpha * (1 - 2 / p + 2 / q)
    where = "borderline" if abs(val - 1) <= tol else ("below" if val < 1 else "above")
    return {"alpha": alpha, "p": p, "q": q, "value": val, "relative_to_one": where}


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

CANTOR_DIGITS = 30
RIESZ_MAX_DEPTH = 24
DENSITY_GRID = 1 << 16


def riesz_sampling_depth(spec: M.RieszSpec, max_frequency: float) -> int:
    """Smallest depth whose partial product has exactly the coefficients of
    the full product at every ``|t| <= max_frequency``."""
    return spec.depth_for(max_frequency)


def _sample_riesz(m: M.Riesz, count, rng, depth):
    n = m.spec.freqs(depth).astype(float)
    a = m.spec.coefs(depth)
    env = float(np.prod(1 + np.abs(a)))
    out = np.empty(0)
    batch = max(1024, int(2 * count * min(env, 1e4)))
    while len(out) < count:
        x = rng.random(batch)
        dens = np.ones(batch)
        for nk, ak in zip(n, a):
            dens *= 1 + ak * np.cos(2 * np.pi * np.mod(nk * x, 1.0))
        acc = x[rng.random(batch) * env < dens]
        out = np.concatenate([out, acc])
    return out[:count]


def _sample_grid_density(values, count, rng):
    """Inverse CDF of a nonnegative density given on a uniform grid of
    ``[0, 1)`` (piecewise constant on cells)."""
    w = np.clip(np.asarray(values, dtype=float), 0.0, None)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    u = rng.random(count)
    cell = np.searchsorted(cdf, u, side="right")
    cell = np.minimum(cell, len(w) - 1)
    return (cell + rng.random(count)) / len(w)


def sample(m: M.SpectralMeasure, count: int, seed: int = 0, riesz_depth: int | None = None,
           rng: np.random.Generator | None = None) -> np.ndarray:
    """Independent draws from ``m`` as points of ``[0, 1)``.

    Cantor points use 30 random ternary digits in {0, 1}. Riesz products are
    sampled by rejection against a partial product density (depth
    ``riesz_depth``, default from :func:`riesz_sampling_depth` at frequency
    ``10**6``). Absolutely continuous measures use the inverse CDF of their
    density on a fine grid. Convolutions, powers, reflections and mixtures
    are sampled structurally.
    """
    count = check_positive_int(count, "count", 0) if count else 0
    rng = rng if rng is not None else np.random.default_rng(seed)
    if count == 0:
        return np.empty(0)
    if isinstance(m, M.Lebesgue):
        return rng.random(count)
    if isinstance(m, M.Dirac):
        return np.full(count, m.x0)
    if isinstance(m, M.Cantor):
        digits = rng.integers(0, 2, size=(count, CANTOR_DIGITS))
        weights = 3 ** np.arange(CANTOR_DIGITS - 1, -1, -1, dtype=np.int64)
        return (digits @ weights).astype(float) / 3.0 ** CANTOR_DIGITS
    if isinstance(m, M.Riesz):
        depth = riesz_depth
        if depth is None:
            depth = min(riesz_sampling_depth(m.spec, 1e6), m.spec.available_depth)
        return _sample_riesz(m, count, rng, min(depth, RIESZ_MAX_DEPTH))
    if isinstance(m, M.ConvexAC):
        from .circle import build_nonneg_from_convex

        seq = m.seq
        T = max(4096, 4 * seq.start)
        g = build_nonneg_from_convex(seq, T, DENSITY_GRID).density
        return _sample_grid_density(g.samples.real, count, rng)
    if isinstance(m, M.TrigPolynomialMeasure):
        from .circle import density_of

        g = density_of(m, max(DENSITY_GRID, 8 * m.degree))
        return _sample_grid_density(g.samples.real, count, rng)
    if isinstance(m, M.Mixture):
        comp = rng.choice(len(m.parts), size=count, p=np.asarray(m.weights))
        out = np.empty(count)
        for i, part in enumerate(m.parts):
            idx = np.flatnonzero(comp == i)
            if len(idx):
                out[idx] = sample(part, len(idx), rng=rng, riesz_depth=riesz_depth)
        return out
    if isinstance(m, M.Convolution):
        return np.mod(sample(m.left, count, rng=rng, riesz_depth=riesz_depth)
                      + sample(m.right, count, rng=rng, riesz_depth=riesz_depth), 1.0)
    if isinstance(m, M.Power):
        acc = np.zeros(count)
        for _ in range(m.k):
            acc += sample(m.base, count, rng=rng, riesz_depth=riesz_depth)
        return np.mod(acc, 1.0)
    if isinstance(m, M.Reflected):
        return np.mod(-sample(m.base, count, rng=rng, riesz_depth=riesz_depth), 1.0)
    raise SpecError(f"sampling is not supported for measure kind {m.kind!r}")


# ---------------------------------------------------------------------------
# Weyl sums and discrepancy
# ---------------------------------------------------------------------------


def _phases(x: float, m_freq: int, n: np.ndarray) -> np.ndarray:
    return np.mod(float(m_freq) * n.astype(float) * x, 1.0)


def weyl_sum(x: float, m_freq: int, seq: SequenceSpec, N: int) -> complex:
    """``(1/N) sum_{k <= N} e(m n_k x)``."""
    if int(m_freq) == 0:
        raise ValueError("frequency must be nonzero")
    N = check_positive_int(N, "N")
    n = seq.generate(N)
    return complex(np.mean(np.exp(2j * np.pi * _phases(float(x), int(m_freq), n))))


def discrepancy(points) -> float:
    """Star discrepancy ``sup_t |#{x_k < t}/N - t|`` of points mod 1.

    Uses the sorted-points formula
    ``max_k max(k/N - x_(k), x_(k) - (k-1)/N)``.
    """
    x = np.sort(np.mod(np.asarray(points, dtype=float).ravel(), 1.0))
    N = len(x)
    if N == 0:
        raise ValueError("discrepancy of an empty point set")
    k = np.arange(1, N + 1)
    return float(max(np.max(k / N - x), np.max(x - (k - 1) / N)))


# ---------------------------------------------------------------------------
# Davenport-Erdos-LeVeque series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DELReport:
    """DEL series verdict with its inner sums and side diagnostics.

    ``inner[N-1]`` is ``sum_{k, j <= N} nu_hat(m (n_k - n_j))``. ``bound``
    is the verdict for the majorant ``N^-2 sum_{0 < |t| <= D_N} |nu_hat(m t)|
    + N^-2`` obtained from ``V_N(t) <= N`` with ``D_N = n_N - n_1``.
    ``decay_gamma`` is the fitted exponent in ``|nu_hat(n)| ~ (log n)^-gamma``
    for the coefficient envelope.
    """

    series: SeriesVerdict
    inner: np.ndarray = field(repr=False)
    max_imag: float = 0.0
    method: str = ""
    bound: SeriesVerdict | None = None
    decay_gamma: float | None = None

    @property
    def verdict(self) -> str:
        return self.series.verdict

    def as_dict(self) -> dict:
        return {"series": self.series.as_dict(), "method": self.method, "max_imag": self.max_imag,
                "bound": None if self.bound is None else self.bound.as_dict(),
                "decay_gamma": self.decay_gamma}


def _del_arith(m, b, m_freq, N_max):
    # inner(N) = N nu(0) + 2 Re[N C1(N) - C2(N)] with C1 = sum_{t<N} nu(mbt),
    # C2 = sum_{t<N} t nu(mbt)
    t = np.arange(1, N_max, dtype=np.int64)
    c = m.coefficients(m_freq * b * t) if len(t) else np.zeros(0, complex)
    c0 = m.coefficient(0)
    C1 = np.concatenate([[0], np.cumsum(c)])
    C2 = np.concatenate([[0], np.cumsum(t * c)])
    N = np.arange(1, N_max + 1)
    inner = N * c0 + 2 * (N * C1 - C2).real
    # pairing check: the mirror sum uses nu(-t)
    cm = m.coefficients(-m_freq * b * t) if len(t) else np.zeros(0, complex)
    D1 = np.concatenate([[0], np.cumsum(cm)])
    D2 = np.concatenate([[0], np.cumsum(t * cm)])
    full = N * c0 + (N * C1 - C2) + (N * D1 - D2)
    return inner.real, float(np.max(np.abs(full.imag))) if len(full) else 0.0


def _del_general(m, n, m_freq):
    N_max = len(n)
    inner = np.empty(N_max)
    c0 = m.coefficient(0)
    acc = 0.0
    max_imag = 0.0
    for N in range(1, N_max + 1):
        if N > 1:
            d = n[N - 1] - n[: N - 1]
            fwd = m.coefficients(m_freq * d).sum()
            bwd = m.coefficients(-m_freq * d).sum()
            acc += fwd + bwd
        else:
            acc = 0.0
        total = N * c0 + acc
        max_imag = max(max_imag, abs(complex(total).imag))
        inner[N - 1] = complex(total).real
    return inner, max_imag


def _decay_gamma(m, X):
    from .criteria import abs_coefficients

    a = abs_coefficients(m, int(X))
    ex = []
    e = 16
    while 2 * e <= len(a):
        ex.append((math.log(math.log(e)), float(a[e - 1: 2 * e - 1].max())))
        e *= 2
    pts = [(u, math.log(v)) for u, v in ex if v > 0]
    if len(pts) < 3:
        return None
    u, y = np.array(pts).T
    return float(-np.polyfit(u, y, 1)[0])


def del_series(m: M.SpectralMeasure, seq: SequenceSpec, m_freq: int = 1, N_max: int = 2000,
               cfg: FitConfig = DEFAULT_FIT, bound: bool = True,
               bound_max_frequency: int = 10 ** 6) -> DELReport:
    """Davenport-Erdos-LeVeque series for ``(n_k x)`` with ``x ~ m``.

    Arithmetic sequences use an ``O(N_max)`` closed form through cumulative
    sums of ``nu_hat`` along the progression. Other sequences add one row of
    the double sum per step (``O(N)`` work each). A Converges verdict means
    ``(m n_k x)`` is uniformly distributed for ``m``-almost every ``x``.
    """
    N_max = check_positive_int(N_max, "N_max", 2)
    m_freq = int(m_freq)
    if m_freq == 0:
        raise ValueError("frequency must be nonzero")
    n = seq.generate(N_max)
    if seq.kind == "arith":
        inner, imag = _del_arith(m, int(seq.b), m_freq, N_max)
        method = "arithmetic_closed_form"
    else:
        inner, imag = _del_general(m, n, m_freq)
        method = "incremental_rows"
    N = np.arange(1, N_max + 1, dtype=float)
    desc = f"sum_N N^-3 sum_(k,j<=N) nu_hat({m_freq}(n_k - n_j))"
    verdict = series_verdict(np.clip(inner, 0.0, None) / N ** 3, desc, cfg)

    bound_v = None
    if bound:
        span = (n - n[0]) * abs(m_freq)
        X = int(min(span[-1], bound_max_frequency))
        Nb = int(np.searchsorted(span, X, side="right"))
        if Nb >= 2:
            from .criteria import abs_coefficients

            a = abs_coefficients(m, X)
            am = a[abs(m_freq) - 1::abs(m_freq)] if abs(m_freq) > 1 else a
            cs = np.concatenate([[0.0], np.cumsum(am)])
            idx = np.minimum(span[:Nb] // abs(m_freq), len(am)).astype(np.int64)
            # |sum_{k,j} nu(m(n_k-n_j))| <= N + N * 2 sum_{0<t<=D_N} |nu(mt)|
            terms = (N[:Nb] * abs(m.coefficient(0)) + N[:Nb] * 2 * cs[idx]) / N[:Nb] ** 3
            bound_v = series_verdict(terms, "majorant from V_N(t) <= N", cfg)
    gamma = _decay_gamma(m, min(bound_max_frequency, 1 << 17))
    return DELReport(verdict, inner, imag, method, bound_v, gamma)


# ---------------------------------------------------------------------------
# Sampling experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UDReport:
    """Per-sample Weyl maxima and discrepancies with summary statistics."""

    points: np.ndarray
    weyl_max: np.ndarray
    discrepancies: np.ndarray
    N: int
    m_freqs: tuple
    weyl_threshold: float
    discrepancy_threshold: float
    seed: int

    @property
    def weyl_pass(self) -> int:
        return int(np.sum(self.weyl_max <= self.weyl_threshold))

    @property
    def discrepancy_pass(self) -> int:
        return int(np.sum(self.discrepancies <= self.discrepancy_threshold))

    @property
    def both_pass(self) -> int:
        return int(np.sum((self.weyl_max <= self.weyl_threshold)
                          & (self.discrepancies <= self.discrepancy_threshold)))

    def quantiles(self, which: str) -> dict:
        arr = self.weyl_max if which == "weyl" else self.discrepancies
        qs = (0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0)
        return {f"{q:g}": float(np.quantile(arr, q)) for q in qs}

    def as_dict(self) -> dict:
        n = len(self.points)
        return {
            "N": self.N, "samples": n, "seed": self.seed, "m_freqs": list(self.m_freqs),
            "weyl_threshold": self.weyl_threshold,
            "discrepancy_threshold": self.discrepancy_threshold,
            "weyl_pass": self.weyl_pass, "discrepancy_pass": self.discrepancy_pass,
            "both_pass": self.both_pass,
            "weyl_fail_fraction": 1 - self.weyl_pass / n if n else 0.0,
            "discrepancy_fail_fraction": 1 - self.discrepancy_pass / n if n else 0.0,
            "weyl_quantiles": self.quantiles("weyl"),
            "discrepancy_quantiles": self.quantiles("discrepancy"),
        }

    def rows(self):
        """Per-sample CSV rows."""
        for i, (x, w, d) in enumerate(zip(self.points, self.weyl_max, self.discrepancies)):
            yield {"index": i, "x": float(x), "weyl_max": float(w), "discrepancy": float(d)}


def _per_point(x, n, m_freqs):
    w = 0.0
    for mf in m_freqs:
        w = max(w, abs(np.mean(np.exp(2j * np.pi * _phases(x, mf, n)))))
    return w, discrepancy(_phases(x, 1, n))


def ud_experiment(m: M.SpectralMeasure, seq: SequenceSpec, samples: int = 100, N: int = 100_000,
                  m_freqs=(1,), seed: int = 0, weyl_threshold: float = 0.05,
                  discrepancy_threshold: float = 0.02, threads: int | None = None,
                  riesz_depth: int | None = None) -> UDReport:
    """Sample ``x ~ m`` and measure how uniform ``(n_k x mod 1)_{k<=N}`` is.

    For each sample the report holds ``max_m |S_N(x, m)|`` over ``m_freqs``
    and the star discrepancy of ``{n_k x}``. Riesz samples use a partial
    product exact up to frequency ``max|m| * n_N``.
    """
    samples = check_positive_int(samples, "samples")
    m_freqs = tuple(int(v) for v in m_freqs)
    if any(v == 0 for v in m_freqs):
        raise ValueError("frequencies must be nonzero")
    n = seq.generate(N)
    if riesz_depth is None and isinstance(m, M.Riesz):
        need = max(abs(v) for v in m_freqs) * float(n[-1])
        riesz_depth = min(riesz_sampling_depth(m.spec, need), m.spec.available_depth)
    pts = sample(m, samples, seed=seed, riesz_depth=riesz_depth)
    threads = threads or default_threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(lambda x: _per_point(x, n, m_freqs), pts))
    else:
        res = [_per_point(x, n, m_freqs) for x in pts]
    w = np.array([r[0] for r in res])
    d = np.array([r[1] for r in res])
    return UDReport(pts, w, d, int(N), m_freqs, weyl_threshold, discrepancy_threshold, seed)
