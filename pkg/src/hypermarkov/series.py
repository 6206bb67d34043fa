"""Heuristic convergence verdicts for series with nonnegative terms.

A finite computation cannot decide whether an infinite series converges.
The verdicts here are a disciplined guess. Dyadic block means of the terms
are fitted to

    log(mean over [2^j, 2^(j+1))) ~ c - beta * log(n) - gamma * log(log(n)),

over two nested windows (the last three decades and the last two). ``beta``
above ``1 + beta_margin`` means convergence and below ``1 - beta_margin``
divergence. When ``beta`` is within the margin of 1, the logarithmic exponent
``gamma`` decides with margin ``gamma_margin``. A verdict is only issued when
both windows agree. Borderline cases (``|beta - 1| <= clear_margin``) also need
at least ``borderline_min_n`` terms.

Oscillating profiles (lacunary or self-similar spectra) make the two-exponent
fit unreliable. When its residual exceeds ``max_rms`` the window falls back to
a pure power law and only decides if that exponent is farther than
``clear_margin`` from 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONVERGES = "Converges"
DIVERGES = "Diverges"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class FitConfig:
    """Tuning knobs of the tail fit."""

    beta_margin: float = 0.02
    gamma_margin: float = 0.1
    clear_margin: float = 0.25
    borderline_min_n: int = 10_000
    min_blocks: int = 4
    max_rms: float = 0.05
    zero_tol: float = 0.0


DEFAULT_FIT = FitConfig()


@dataclass(frozen=True)
class TailFit:
    """Result of one windowed fit."""

    start: int
    blocks: int
    beta: float
    gamma: float
    intercept: float
    rms: float
    model: str
    verdict: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SeriesVerdict:
    """Partial sums of a series together with a three-valued verdict.

    Attributes
    ----------
    description : str
        Human-readable term rule.
    checkpoints, partial_sums : tuple
        Partial sums ``sum_{n <= N} t_n`` at logarithmically spaced ``N``.
    verdict : str
        ``"Converges"``, ``"Diverges"`` or ``"Inconclusive"``.
    exponent : float or None
        Fitted power-law decay exponent ``beta`` of the terms (narrow window).
    log_exponent : float or None
        Fitted logarithmic exponent ``gamma`` (narrow window).
    decade_slope : float or None
        Least-squares slope of ``log(n * t_n)`` against ``log n`` over the
        last decade (block means), for quick inspection.
    tail_estimate : float or None
        Integral of the fitted model beyond the last term (only when the
        verdict is Converges).
    note : str
        Why the verdict was reached.
    fits : tuple of TailFit
    """

    description: str
    n_terms: int
    checkpoints: tuple
    partial_sums: tuple
    verdict: str
    exponent: float | None
    log_exponent: float | None
    decade_slope: float | None
    tail_estimate: float | None
    note: str
    fits: tuple = field(default=())

    @property
    def total(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def as_dict(self) -> dict:
        return {
            "description": self.description,
            "n_terms": self.n_terms,
            "checkpoints": list(self.checkpoints),
            "partial_sums": list(self.partial_sums),
            "verdict": self.verdict,
            "exponent": self.exponent,
            "log_exponent": self.log_exponent,
            "decade_slope": self.decade_slope,
            "tail_estimate": self.tail_estimate,
            "note": self.note,
            "fits": [f.as_dict() for f in self.fits],
        }


def checkpoints_for(N: int) -> list[int]:
    """Powers of ten from 100 up to ``N`` plus ``N`` itself."""
    pts = []
    c = 100
    while c < N:
        pts.append(c)
        c *= 10
    pts.append(int(N))
    return pts


def _dyadic_blocks(terms: np.ndarray, start: int):
    N = len(terms)
    e = 1 << max(3, int(math.ceil(math.log2(max(start, 1)))))
    mids, means = [], []
    while 2 * e - 1 <= N:
        block = terms[e - 1: 2 * e - 1]
        mids.append(math.sqrt(e * (2 * e - 1)))
        means.append(float(block.mean()))
        e *= 2
    return np.array(mids), np.array(means)


def _decide(beta: float, gamma: float, cfg: FitConfig) -> str:
    if beta > 1 + cfg.beta_margin:
        return CONVERGES
    if beta < 1 - cfg.beta_margin:
        return DIVERGES
    if gamma > 1 + cfg.gamma_margin:
        return CONVERGES
    if gamma < 1 - cfg.gamma_margin:
        return DIVERGES
    return INCONCLUSIVE


def _fit_window(terms, start, cfg):
    mids, means = _dyadic_blocks(terms, start)
    keep = means > 0
    if keep.sum() < cfg.min_blocks:
        return None
    first = 1 << max(3, int(math.ceil(math.log2(max(start, 1)))))
    x = np.log(mids[keep])
    y = np.log(means[keep])
    X = np.column_stack([np.ones_like(x), x, np.log(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    rms = float(np.sqrt(np.mean((y - X @ coef) ** 2)))
    if rms <= cfg.max_rms:
        beta, gamma = -float(coef[1]), -float(coef[2])
        return TailFit(first, int(keep.sum()), beta, gamma, float(coef[0]), rms, "log-power",
                       _decide(beta, gamma, cfg))
    # Oscillating profile: a single power law with a wide margin.
    X1 = X[:, :2]
    c1, *_ = np.linalg.lstsq(X1, y, rcond=None)
    rms1 = float(np.sqrt(np.mean((y - X1 @ c1) ** 2)))
    beta = -float(c1[1])
    if beta > 1 + cfg.clear_margin:
        verdict = CONVERGES
    elif beta < 1 - cfg.clear_margin:
        verdict = DIVERGES
    else:
        verdict = INCONCLUSIVE
    return TailFit(first, int(keep.sum()), beta, 0.0, float(c1[0]), rms1, "power", verdict)


def _decade_slope(terms):
    N = len(terms)
    mids, means = _dyadic_blocks(terms, max(8, N // 10))
    keep = means > 0
    if keep.sum() < 2:
        return None
    slope = np.polyfit(np.log(mids[keep]), np.log(means[keep] * mids[keep]), 1)[0]
    return float(slope)


def _tail_integral(fit: TailFit, terms: np.ndarray, cfg: FitConfig) -> float:
    """Integral of the fitted model over ``(N, inf)``.

    When the power exponent is within the margin of 1 the model is refitted
    with ``beta = 1`` so the logarithmic tail integrates in closed form.
    """
    from scipy.integrate import quad

    N = len(terms)
    u0 = math.log(N)
    if fit.model == "log-power" and abs(fit.beta - 1) <= cfg.beta_margin:
        mids, means = _dyadic_blocks(terms, fit.start)
        keep = means > 0
        x = np.log(mids[keep])
        y = np.log(means[keep]) + x
        X = np.column_stack([np.ones_like(x), np.log(x)])
        (c, g), *_ = np.linalg.lstsq(X, y, rcond=None)
        gamma = -float(g)
        if gamma <= 1:
            return math.inf
        return float(math.exp(c) * u0 ** (1 - gamma) / (gamma - 1))
    if fit.beta < 1:
        return math.inf

    def integrand(u):
        return math.exp(fit.intercept + (1.0 - fit.beta) * u - fit.gamma * math.log(u))

    val, _ = quad(integrand, u0, math.inf, limit=200)
    return float(val)


def series_verdict(terms, description: str, cfg: FitConfig = DEFAULT_FIT) -> SeriesVerdict:
    """Verdict for ``sum_{n>=1} t_n`` from the terms ``t_1..t_N``.

    Parameters
    ----------
    terms : array_like
        Nonnegative terms; ``terms[n-1]`` is ``t_n``.
    description : str
        Term rule, echoed in the result.
    cfg : FitConfig
    """
    t = np.asarray(terms, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("terms must be a nonempty 1-d array")
    if np.any(t < -1e-12 * max(1.0, float(np.max(np.abs(t))))):
        raise ValueError("series terms must be nonnegative")
    t = np.clip(t, 0.0, None)
    N = len(t)
    cps = checkpoints_for(N)
    csum = np.cumsum(t)
    partial = tuple(float(csum[c - 1]) for c in cps)
    slope = _decade_slope(t)

    if not np.any(t[N // 2:] > cfg.zero_tol):
        last = int(np.flatnonzero(t > cfg.zero_tol)[-1]) + 1 if np.any(t > cfg.zero_tol) else 0
        return SeriesVerdict(description, N, tuple(cps), partial, CONVERGES, None, None, slope,
                             0.0, f"terms vanish beyond n={last}", ())

    wide = _fit_window(t, max(8, N // 1000), cfg)
    narrow = _fit_window(t, max(8, N // 100), cfg)
    fits = tuple(f for f in (wide, narrow) if f is not None)
    if wide is None or narrow is None:
        return SeriesVerdict(description, N, tuple(cps), partial, INCONCLUSIVE, None, None, slope,
                             None, "too few nonzero dyadic blocks to fit the tail", fits)

    if wide.verdict != narrow.verdict:
        verdict, note = INCONCLUSIVE, (
            f"tail windows disagree ({wide.verdict} from n>={wide.start}, "
            f"{narrow.verdict} from n>={narrow.start})")
    elif narrow.verdict == INCONCLUSIVE:
        if narrow.model == "power" or wide.model == "power":
            note = "oscillating tail; power-law exponent too close to 1 to decide"
        else:
            note = "fitted decay is within the margin of 1/(n log n)"
        verdict = INCONCLUSIVE
    elif narrow.model == "power" or wide.model == "power":
        verdict = narrow.verdict
        note = "oscillating tail; decided by a power-law exponent clear of 1"
    else:
        borderline = min(abs(wide.beta - 1), abs(narrow.beta - 1)) <= cfg.clear_margin
        if borderline and N < cfg.borderline_min_n:
            verdict, note = INCONCLUSIVE, (
                f"decay exponent near 1 needs at least {cfg.borderline_min_n} terms")
        else:
            verdict = narrow.verdict
            how = "log exponent" if abs(narrow.beta - 1) <= cfg.beta_margin else "power exponent"
            note = f"both tail windows agree; decided by the {how}"

    tail = _tail_integral(narrow, t, cfg) if verdict == CONVERGES else None
    return SeriesVerdict(description, N, tuple(cps), partial, verdict, narrow.beta, narrow.gamma,
                         slope, tail, note, fits)
