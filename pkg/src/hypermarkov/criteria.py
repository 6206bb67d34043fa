"""Numerical hyperboundedness diagnostics for convolution operators.

Each diagnostic turns a measure's coefficients into a series or an
inequality check. Divergence of the weighted square sums shows the
convolution operator is not hyperbounded. Summability of a power of the
coefficients shows that it is. The verdicts on infinite series are
heuristic (see :mod:`hypermarkov.series`), and every report carries the raw
partial sums so a reader can override them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import chunked_map
from ._validation import check_exponent, check_positive_int
from .measures import Power, Reflected, Riesz, RieszSpec, SpectralMeasure
from .series import CONVERGES, DIVERGES, INCONCLUSIVE, DEFAULT_FIT, FitConfig, SeriesVerdict, series_verdict

DEFAULT_N = 100_000


def abs_coefficients(m: SpectralMeasure, N: int, start: int = 1) -> np.ndarray:
    """``|nu_hat(n)|`` for ``n = start..N``, evaluated in chunks."""
    return chunked_map(lambda n: np.abs(m.coefficients(n)), start, N + 1)


def _two_sided_sq(m, N):
    """``|nu_hat(n)|^2 + |nu_hat(-n)|^2`` for ``n = 1..N`` (hermitian symmetry)."""
    a = abs_coefficients(m, N)
    return 2.0 * a * a


def _riesz_power(m):
    """``(spec, k)`` when ``|nu_hat| = |riesz coefficient|**k``, else ``None``."""
    k = 1
    while True:
        if isinstance(m, Riesz):
            return m.spec, k
        if isinstance(m, Power):
            k *= m.k
            m = m.base
        elif isinstance(m, Reflected):
            m = m.base
        else:
            return None


def wiener_average(m: SpectralMeasure, N: int) -> float:
    """``(2N+1)^-1 sum_{|n|<=N} |nu_hat(n)|^2``; tends to the sum of squared
    atom masses."""
    N = check_positive_int(N, "N")
    sq = _two_sided_sq(m, N)
    return float((1.0 + sq.sum()) / (2 * N + 1))


def ht_series(m: SpectralMeasure, N: int = DEFAULT_N, cfg: FitConfig = DEFAULT_FIT) -> SeriesVerdict:
    """``sum_{n != 0} |nu_hat(n)|^2 / |n|``. Divergence rules out hyperboundedness."""
    N = check_positive_int(N, "N", 2)
    n = np.arange(1, N + 1, dtype=float)
    return series_verdict(_two_sided_sq(m, N) / n, "|nu(n)|^2/|n|", cfg)


def hr_weights(p: float, eps: float, N: int) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=float)
    return 1.0 / (n ** (2 * (p - 1) / p) * np.log1p(n) ** (1 + eps))


def hr_series(m: SpectralMeasure, p: float, eps: float = 0.1, N: int = DEFAULT_N,
              cfg: FitConfig = DEFAULT_FIT) -> SeriesVerdict:
    """``sum_{n != 0} |nu_hat(n)|^2 / (|n|^{2(p-1)/p} log^{1+eps}(1+|n|))``.

    Divergence shows the operator does not map ``L^p`` into ``L^2``.
    """
    p = check_exponent(p, "p", 1.0, 2.0, include_low=False, include_high=False)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    N = check_positive_int(N, "N", 2)
    terms = _two_sided_sq(m, N) * hr_weights(p, eps, N)
    return series_verdict(terms, f"|nu(n)|^2/(n^{2 * (p - 1) / p:.4g} log^{1 + eps:g}(1+n))", cfg)


@dataclass(frozen=True)
class AlphaResult:
    """Outcome of the ``sum |nu_hat|^alpha`` test."""

    alpha: float
    implied_p: float
    series: SeriesVerdict
    method: str

    @property
    def verdict(self) -> str:
        return self.series.verdict

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "implied_p": self.implied_p, "method": self.method,
                "series": self.series.as_dict()}


def implied_p(alpha: float) -> float:
    """Exponent ``p = max(1, 2 alpha/(alpha+2))`` such that summability of
    ``|nu_hat|^alpha`` gives ``L^p -> L^2`` boundedness."""
    return max(1.0, 2.0 * alpha / (alpha + 2.0))


def _riesz_factor_series(spec: RieszSpec, power: float, N: int, cfg: FitConfig, what: str):
    """Series ``sum_j |a_j|^power`` over the factors of a Riesz product.

    For a Riesz product ``sum_n |nu_hat(n)|^s = prod_j (1 + 2|a_j/2|^s)``, so
    the coefficient series converges exactly when this factor series does.
    """
    if spec.finite:
        a = np.abs(spec.coefs())
        terms = np.zeros(max(N, len(a)))
        terms[: len(a)] = a ** power
    else:
        from .measures import SequenceRule  # noqa: F401  (rule already validated)

        j = np.arange(1, N + 1)
        terms = np.abs(np.asarray(spec.coefficients(j), dtype=float)) ** power
    return series_verdict(terms, f"sum_j |a_j|^{power:g} ({what})", cfg)


def alpha_summability(m: SpectralMeasure, alpha: float, N: int = DEFAULT_N,
                      cfg: FitConfig = DEFAULT_FIT) -> AlphaResult:
    """Test ``sum_n |nu_hat(n)|^alpha < inf``.

    Convergence shows the operator maps ``L^p`` into ``L^2`` with
    ``p = implied_p(alpha)``. Riesz products (and their powers) are reduced
    to the factor series through the product identity.
    """
    alpha = check_exponent(alpha, "alpha", 0.0, include_low=False, high=math.inf, include_high=False)
    N = check_positive_int(N, "N", 2)
    rp = _riesz_power(m)
    if rp is not None:
        spec, k = rp
        ser = _riesz_factor_series(spec, alpha * k, N, cfg, "Riesz product identity")
        return AlphaResult(alpha, implied_p(alpha), ser, "riesz_product_identity")
    a = abs_coefficients(m, N)
    ser = series_verdict(2.0 * a ** alpha, f"|nu(n)|^{alpha:g}", cfg)
    return AlphaResult(alpha, implied_p(alpha), ser, "direct")


def power_singularity_check(spec: RieszSpec, k: int, N: int = DEFAULT_N,
                            cfg: FitConfig = DEFAULT_FIT) -> SeriesVerdict:
    """``sum_{j<=N} a_j^{2k}``: divergence means the ``k``-fold convolution
    power of the Riesz product is singular, convergence that it is
    absolutely continuous."""
    k = check_positive_int(k, "k")
    N = check_positive_int(N, "N", 2)
    return _riesz_factor_series(spec, 2.0 * k, N, cfg, f"convolution power k={k}")


def harris_power_check(m: SpectralMeasure, k_max: int = 10, N: int = DEFAULT_N,
                       cfg: FitConfig = DEFAULT_FIT):
    """Smallest ``k <= k_max`` with ``sum |nu_hat|^{2k}`` judged convergent.

    Returns
    -------
    (k or None, list of SeriesVerdict)
    """
    k_max = check_positive_int(k_max, "k_max")
    rp = _riesz_power(m)
    a = None if rp is not None else abs_coefficients(m, N)
    trail = []
    for k in range(1, k_max + 1):
        if rp is not None:
            spec, mult = rp
            ser = _riesz_factor_series(spec, 2.0 * k * mult, N, cfg, f"power k={k}")
        else:
            ser = series_verdict(2.0 * a ** (2 * k), f"|nu(n)|^{2 * k}", cfg)
        trail.append(ser)
        if ser.verdict == CONVERGES:
            return k, trail
    return None, trail


# ---------------------------------------------------------------------------
# Window bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowReport:
    """Comparison of coefficient window sums against a hypothesized norm."""

    p: float
    q: float
    norm_cap: float
    a: int
    b: int
    branch: str
    constant: float
    Ns: tuple
    lhs: tuple
    rhs: tuple
    violations: tuple
    r: float | None
    r_lhs: tuple
    r_rhs: tuple
    r_violations: tuple

    @property
    def violated(self) -> bool:
        return bool(self.violations or self.r_violations)

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()} | {
            "violated": self.violated}


def dirichlet_constant(p: float, N: int) -> float:
    """Observed ``sup_{M<=N} ||D_M||_p / M^{(p-1)/p}`` (1 for ``p = 1``)."""
    from .circle import dirichlet_norm

    if p == 1:
        return 1.0
    Ms = np.unique(np.round(np.geomspace(1, max(N, 1), 40)).astype(int))
    return max(dirichlet_norm(int(M), p) / M ** ((p - 1) / p) for M in Ms)


def window_bound_check(m: SpectralMeasure, p: float, q: float, norm_cap: float = 1.0,
                       a: int = 0, b: int = 1, N: int = 10_000) -> WindowReport:
    """Look for window sizes ``N`` that contradict ``||P_nu||_{p->q} <= norm_cap``.

    For ``p < 2`` the target exponent is capped at 2 (boundedness into ``L^q``
    with ``q > 2`` implies boundedness into ``L^2`` with the same norm) and

        sum_{|n|<=N} |nu_hat(a+bn)|^2 <= C^2 cap^2 N^{2(p-1)/p} (2N+1)^{(2-q)/q}.

    For ``p >= 2`` the dual form with ``r = q/(q-1)`` is used:

        sum_{|n|<=N} |nu_hat(a+bn)|^2 <= C_r^2 cap^2 N^{2/q} (2N+1)^{(p-2)/p}.

    ``C`` is the observed Dirichlet-kernel constant. When ``p < 2`` the report
    also compares ``sum_{|n|<=N} |nu_hat(n)|^r`` with ``(C cap)^r N^{(p-1)r/p}``,
    ``r = q'/(q'-1)`` for the capped ``q'``.
    """
    p = check_exponent(p, "p", 1.0, math.inf, include_high=False)
    q = check_exponent(q, "q", p, math.inf, include_low=False, include_high=False)
    if not norm_cap >= 1:
        raise ValueError("norm_cap must be >= 1 (a Markov operator has norm >= 1)")
    b = check_positive_int(b, "b")
    N = check_positive_int(N, "N")
    Ns = np.unique(np.round(np.geomspace(1, N, min(N, 60))).astype(int))

    idx = a + b * np.arange(-N, N + 1)
    vals = np.abs(m.coefficients(idx)) ** 2
    center = N
    pref = np.concatenate([[0.0], np.cumsum(vals)])
    lhs = np.array([pref[center + M + 1] - pref[center - M] for M in Ns])

    if p < 2:
        qe = min(q, 2.0)
        C = dirichlet_constant(p, N)
        rhs = C ** 2 * norm_cap ** 2 * Ns ** (2 * (p - 1) / p) * (2 * Ns + 1.0) ** ((2 - qe) / qe)
        branch = "p<2"
    else:
        r_dual = q / (q - 1)
        C = dirichlet_constant(r_dual, N)
        rhs = C ** 2 * norm_cap ** 2 * Ns ** (2 / q) * (2 * Ns + 1.0) ** ((p - 2) / p)
        branch = "p>=2"
    viol = tuple(int(M) for M, l, r_ in zip(Ns, lhs, rhs) if l > r_ * (1 + 1e-12))

    r = None
    r_lhs = r_rhs = ()
    r_viol = ()
    if p < 2 and p > 1:
        qe = min(q, 2.0)
        r = qe / (qe - 1)
        cvals = np.abs(m.coefficients(np.arange(-N, N + 1))) ** r
        cpref = np.concatenate([[0.0], np.cumsum(cvals)])
        rl = np.array([cpref[center + M + 1] - cpref[center - M] for M in Ns])
        rr = (C * norm_cap) ** r * Ns ** ((p - 1) * r / p)
        r_lhs, r_rhs = tuple(float(v) for v in rl), tuple(float(v) for v in rr)
        r_viol = tuple(int(M) for M, l, r_ in zip(Ns, rl, rr) if l > r_ * (1 + 1e-12))

    return WindowReport(p, q, float(norm_cap), int(a), int(b), branch, float(C),
                        tuple(int(v) for v in Ns), tuple(float(v) for v in lhs),
                        tuple(float(v) for v in rhs), viol, r, r_lhs, r_rhs, r_viol)


# ---------------------------------------------------------------------------
# Korner-type regularity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KornerReport:
    constant: float
    holds: bool
    argmax: int | None
    p: float
    q: float
    s: float
    k_implied: int
    harris_series: SeriesVerdict | None

    def as_dict(self) -> dict:
        return {"constant": self.constant, "holds": self.holds, "argmax": self.argmax,
                "p": self.p, "q": self.q, "s": self.s, "k_implied": self.k_implied,
                "harris_series": None if self.harris_series is None else self.harris_series.as_dict()}


def korner_condition(m: SpectralMeasure, N: int = 10_000, p: float = 1.5, q: float = 2.0,
                     cfg: FitConfig = DEFAULT_FIT) -> KornerReport:
    """Smallest ``C`` with ``|nu_hat(n)|^2 <= C n^-1 sum_{k=n+1}^{2n} |nu_hat(k)|^2``
    for ``1 <= n <= N``.

    ``C`` is infinite when a window sum vanishes under a nonzero left side and
    0 when both sides always vanish. If the operator maps ``L^p`` to ``L^q``
    (``p < q <= 2``) the condition forces ``nu^k`` to be absolutely continuous
    for ``k = floor(1/s) + 1``, ``s = 2/p - 2/q``; the report includes the
    series ``sum |nu_hat|^{2k}`` for that ``k`` as a consistency check.
    """
    N = check_positive_int(N, "N", 2)
    p = check_exponent(p, "p", 1.0, 2.0, include_high=False)
    q = check_exponent(q, "q", p, 2.0, include_low=False)
    a2 = abs_coefficients(m, 2 * N) ** 2
    pref = np.concatenate([[0.0], np.cumsum(a2)])
    n = np.arange(1, N + 1)
    window = (pref[2 * n] - pref[n]) / n
    lhs = a2[:N]
    scale = max(1.0, float(a2.max(initial=0.0)))
    tiny = 1e-300 + 1e-28 * scale
    live = lhs > tiny
    if not np.any(live):
        C, arg = 0.0, None
    else:
        dead = live & (window <= tiny)
        if np.any(dead):
            C, arg = math.inf, int(n[dead][0])
        else:
            ratio = np.where(live, lhs / np.where(window > 0, window, 1.0), 0.0)
            i = int(np.argmax(ratio))
            C, arg = float(ratio[i]), int(n[i])
    s = 2 / p - 2 / q
    k = int(math.floor(1 / s)) + 1
    a = abs_coefficients(m, N)
    harris = series_verdict(2.0 * a ** (2 * k), f"|nu(n)|^{2 * k}", cfg)
    return KornerReport(C, math.isfinite(C), arg, p, q, s, k, harris)


# ---------------------------------------------------------------------------
# Composite classification
# ---------------------------------------------------------------------------

NOT_HYPERBOUNDED = "NotHyperbounded"
HYPERBOUNDED = "Hyperbounded"


@dataclass(frozen=True)
class Classification:
    """Aggregate of all diagnostics.

    ``overall`` is one of ``NotHyperbounded``, ``Hyperbounded`` or
    ``Inconclusive``; ``witness`` names the diagnostic that decided it. The
    sufficient conditions used here are not complete: Inconclusive is a
    legitimate final answer.
    """

    has_atoms: bool
    wiener: tuple
    rajchman: bool
    envelope: tuple
    ht: SeriesVerdict
    hr: dict
    alpha: dict
    korner: KornerReport
    harris_power: int | None
    overall: str
    witness: str
    notes: tuple = field(default=())

    @property
    def ht_ok(self) -> bool:
        return self.ht.verdict != DIVERGES

    def as_dict(self) -> dict:
        return {
            "overall": self.overall,
            "witness": self.witness,
            "has_atoms": self.has_atoms,
            "wiener": [list(w) for w in self.wiener],
            "rajchman": self.rajchman,
            "envelope": [list(e) for e in self.envelope],
            "ht_ok": self.ht_ok,
            "ht": self.ht.as_dict(),
            "hr": {f"{p:g}": v.as_dict() for p, v in sorted(self.hr.items())},
            "alpha": {f"{a:g}": v.as_dict() for a, v in sorted(self.alpha.items())},
            "korner": self.korner.as_dict(),
            "harris_power": self.harris_power,
            "notes": list(self.notes),
        }


def _atom_test(sq_terms: np.ndarray, cfg: FitConfig):
    """Atoms make ``|nu_hat|^2`` non-decaying in mean (Wiener). We call the
    mean non-decaying when both tail windows fit ``beta < 0.05`` and
    ``gamma < 0.5``."""
    ser = series_verdict(sq_terms, "|nu(n)|^2", cfg)
    if ser.tail_estimate == 0.0 and ser.exponent is None:
        return False
    if len(ser.fits) < 2:
        return False
    return all(f.beta < 0.05 and f.gamma < 0.5 for f in ser.fits)


def _envelope(a: np.ndarray):
    N = len(a)
    starts = sorted({max(1, N // d) for d in (1000, 100, 10, 2)})
    return tuple((s, float(a[s - 1:].max())) for s in starts)


def classify(m: SpectralMeasure, N: int = DEFAULT_N, ps=(1.2, 1.5, 1.9), eps: float = 0.1,
             alphas=(1.0, 2.0, 3.0, 4.0), k_max: int = 10, korner_N: int | None = None,
             cfg: FitConfig = DEFAULT_FIT, order=None) -> Classification:
    """Run every diagnostic and combine them.

    Precedence: atoms, then divergence of the weighted square series (the
    largest divergent ``p`` is the witness), then convergence of
    ``sum |nu_hat|^alpha`` (the smallest convergent ``alpha``), then the Riesz
    product criterion. Everything else is Inconclusive.

    ``order`` permutes the evaluation order of the diagnostics; it exists to
    test that the result does not depend on it.
    """
    N = check_positive_int(N, "N", 2)
    korner_N = korner_N or min(N, 10_000)
    steps = ["atoms", "ht", "hr", "alpha", "korner", "harris"]
    if order is not None:
        if sorted(order) != sorted(steps):
            raise ValueError(f"order must be a permutation of {steps}")
        steps = list(order)

    a = abs_coefficients(m, N)
    sq = 2.0 * a * a
    res = {}
    for step in steps:
        if step == "atoms":
            res["wiener"] = tuple((M, float((1.0 + sq[:M].sum()) / (2 * M + 1)))
                                  for M in (10 ** j for j in range(1, 7)) if M <= N)
            res["atoms"] = _atom_test(sq, cfg)
        elif step == "ht":
            res["ht"] = series_verdict(sq / np.arange(1, N + 1), "|nu(n)|^2/|n|", cfg)
        elif step == "hr":
            res["hr"] = {float(p): series_verdict(sq * hr_weights(float(p), eps, N),
                                                  f"hr p={float(p):g} eps={eps:g}", cfg)
                         for p in ps}
        elif step == "alpha":
            res["alpha"] = {float(al): alpha_summability(m, float(al), N, cfg) for al in alphas}
        elif step == "korner":
            res["korner"] = korner_condition(m, korner_N, cfg=cfg)
        elif step == "harris":
            res["harris"] = harris_power_check(m, k_max, N, cfg)[0]

    env = _envelope(a)
    rajchman = env[-1][1] < 0.95 * env[0][1] and env[-1][1] < 0.5
    notes = []
    if res["atoms"]:
        overall, witness = NOT_HYPERBOUNDED, "atom"
    elif res["ht"].verdict == DIVERGES:
        overall, witness = NOT_HYPERBOUNDED, "ht diverges"
    elif any(v.verdict == DIVERGES for v in res["hr"].values()):
        p_bad = max(p for p, v in res["hr"].items() if v.verdict == DIVERGES)
        overall, witness = NOT_HYPERBOUNDED, f"hr diverges at p={p_bad:g}"
        notes.append(f"weighted square series diverges for p <= {p_bad:g}; "
                     "larger p below 2 were not excluded by computation")
    elif any(v.verdict == CONVERGES for v in res["alpha"].values()):
        al = min(al for al, v in res["alpha"].items() if v.verdict == CONVERGES)
        overall, witness = HYPERBOUNDED, f"alpha={al:g} (maps L^{implied_p(al):g} to L^2)"
    elif _riesz_power(m) is not None:
        overall, witness = HYPERBOUNDED, "Riesz product with |nu(m)| <= 1/2 for m != 0"
    else:
        overall, witness = INCONCLUSIVE, "no criterion decided"
        notes.append("the sufficient conditions checked are not exhaustive")
    return Classification(res["atoms"], res["wiener"], bool(rajchman), env, res["ht"], res["hr"],
                          res["alpha"], res["korner"], res["harris"], overall, witness, tuple(notes))
