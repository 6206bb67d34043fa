"""Convolution operators on the circle acting on trigonometric polynomials.

Functions on ``[0, 1)`` are represented by :class:`GridFunction`: the
coefficients ``c_n`` for ``|n| <= N`` and the samples on an ``M``-point
uniform grid, related by the discrete Fourier transform. Convolution with a
measure multiplies coefficients by ``nu_hat(n)``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_exponent, check_positive_int
from .exceptions import SpecError
from .measures import ConvexSeq, SpectralMeasure, TrigPolynomialMeasure


def _grid_size(degree: int, factor: int = 8, minimum: int = 64) -> int:
    """Power of two at least ``factor * (2 degree + 1)``."""
    need = max(minimum, factor * (2 * degree + 1))
    return 1 << int(math.ceil(math.log2(need)))


@dataclass(frozen=True)
class GridFunction:
    """A trigonometric polynomial of degree ``N`` on the circle.

    Parameters
    ----------
    coeffs : ndarray of complex, shape (2N+1,)
        ``coeffs[k]`` is the coefficient at frequency ``n = k - N``.
    M : int
        Size of the sampling grid ``x_j = j / M``; at least ``2N+1``.
    authoritative : {"coefficients", "samples"}
        Which representation the object was built from.
    """

    coeffs: np.ndarray
    M: int
    authoritative: str = "coefficients"
    _samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or len(c) % 2 == 0:
            raise ValueError("coefficient array must have odd length 2N+1")
        object.__setattr__(self, "coeffs", c)
        if self.M < len(c):
            raise ValueError(f"grid size M={self.M} below 2N+1={len(c)}")

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_coefficients(cls, coeffs, M: int | None = None) -> "GridFunction":
        c = np.asarray(coeffs, dtype=complex)
        N = (len(c) - 1) // 2
        return cls(c, M or _grid_size(N, factor=1, minimum=16))

    @classmethod
    def from_samples(cls, samples, degree: int | None = None) -> "GridFunction":
        """Interpolate samples on the uniform grid.

        With the default degree ``(M-1)//2`` the round trip is exact for odd
        ``M`` and for band-limited data.
        """
        s = np.asarray(samples)
        M = len(s)
        N = (M - 1) // 2 if degree is None else int(degree)
        if 2 * N + 1 > M:
            raise ValueError("degree too large for the number of samples")
        spec = np.fft.fft(s) / M
        idx = np.arange(-N, N + 1) % M
        return cls(spec[idx], M, "samples", np.array(s, dtype=s.dtype if np.iscomplexobj(s) else float))

    @classmethod
    def constant(cls, value: float = 1.0, M: int = 16) -> "GridFunction":
        return cls(np.array([value], dtype=complex), M)

    # -- views --------------------------------------------------------------
    @property
    def degree(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def coefficient(self, n: int) -> complex:
        N = self.degree
        return complex(self.coeffs[n + N]) if abs(n) <= N else 0.0j

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.degree, self.degree + 1)

    def samples_on(self, M: int) -> np.ndarray:
        """Samples on the grid ``j/M`` for any ``M >= 2N+1``."""
        if M < len(self.coeffs):
            raise ValueError("grid too coarse for exact evaluation")
        buf = np.zeros(M, dtype=complex)
        buf[self.frequencies % M] = self.coeffs
        vals = np.fft.ifft(buf) * M
        return vals.real if self.is_real() else vals

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            object.__setattr__(self, "_samples", self.samples_on(self.M))
        return self._samples

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.M) / self.M

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        scale = max(1.0, float(np.abs(c).max(initial=0.0)))
        return bool(np.all(np.abs(c - np.conj(c[::-1])) <= tol * scale))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = np.exp(2j * np.pi * np.multiply.outer(x, self.frequencies)) @ self.coeffs
        return vals.real if self.is_real() else vals

    # -- algebra ------------------------------------------------------------
    def with_coefficients(self, coeffs) -> "GridFunction":
        return GridFunction(np.asarray(coeffs, dtype=complex), self.M)

    def translate(self, x0: float) -> "GridFunction":
        """``x -> f(x - x0)``."""
        return self.with_coefficients(self.coeffs * np.exp(-2j * np.pi * self.frequencies * x0))

    def norm(self, p, M: int | None = None) -> float:
        """``L^p`` norm for the normalized Lebesgue measure.

        ``p = 2`` uses Parseval. Other exponents use the trapezoid rule on a
        grid of ``M`` points (default: 16 samples per unit of bandwidth),
        which is exact only for even integer ``p`` below the Nyquist limit.
        ``p = inf`` gives the grid maximum, a lower bound.
        """
        p = check_exponent(p, "p", 1.0, math.inf)
        if p == 2:
            return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))
        vals = np.abs(self.samples_on(M or _grid_size(self.degree, factor=8)))
        if math.isinf(p):
            return float(vals.max())
        return float(np.mean(vals ** p) ** (1.0 / p))

    def norm_with_error(self, p, M: int | None = None) -> tuple[float, float]:
        """Norm on grids of size ``M`` and ``2M``; the difference is reported
        as the quadrature error estimate."""
        M = M or _grid_size(self.degree, factor=8)
        a, b = self.norm(p, M), self.norm(p, 2 * M)
        return b, abs(b - a)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def dirichlet(N: int, M: int | None = None) -> GridFunction:
    """``D_N(x) = sum_{|k|<=N} e(kx)``."""
    N = check_positive_int(N, "N", 0)
    return GridFunction(np.ones(2 * N + 1, dtype=complex), M or _grid_size(N, factor=1, minimum=16))


def fejer(N: int, M: int | None = None) -> GridFunction:
    """``K_N(x) = sum_{|k|<=N} (1 - |k|/(N+1)) e(kx)``, nonnegative."""
    N = check_positive_int(N, "N", 0)
    k = np.arange(-N, N + 1)
    return GridFunction((1.0 - np.abs(k) / (N + 1.0)).astype(complex),
                        M or _grid_size(N, factor=1, minimum=16))


def dirichlet_values(N: int, x) -> np.ndarray:
    """Closed form ``sin(pi (2N+1) x) / sin(pi x)`` with the limit at 0."""
    x = np.asarray(x, dtype=float)
    s = np.sin(np.pi * x)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.sin(np.pi * (2 * N + 1) * x) / s
    return np.where(np.abs(s) < 1e-300, 2.0 * N + 1.0, v)


@functools.lru_cache(maxsize=256)
def dirichlet_norm(N: int, p: float, oversample: int = 64) -> float:
    """``||D_N||_p`` by the trapezoid rule on ``oversample * max(N, 1)``
    points (at least 1024)."""
    p = float(p)
    if p == 2:
        return math.sqrt(2 * N + 1)
    M = max(1024, oversample * max(N, 1))
    vals = np.abs(dirichlet_values(N, np.arange(M) / M))
    if math.isinf(p):
        return float(vals.max())
    return float(np.mean(vals ** p) ** (1 / p))


@dataclass(frozen=True)
class KernelNorm:
    N: int
    p: float
    value: float
    grid: int
    error: float

    def as_dict(self):
        return dict(self.__dict__)


def kernel_norms(N: int, p: float, oversample: int = 64) -> KernelNorm:
    """``||D_N||_p`` with a quadrature error estimate (difference between
    the grid and a grid of half the size)."""
    N = check_positive_int(N, "N")
    p = check_exponent(p, "p", 1.0, math.inf, include_high=False)
    fine = dirichlet_norm(N, p, oversample)
    coarse = dirichlet_norm(N, p, max(2, oversample // 2))
    return KernelNorm(N, p, fine, max(1024, oversample * N), abs(fine - coarse))


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------


def multiplier(m: SpectralMeasure, degree: int) -> np.ndarray:
    """``nu_hat(n)`` for ``|n| <= degree``."""
    return m.coefficients(np.arange(-degree, degree + 1))


def apply_multiplier(m: SpectralMeasure, f: GridFunction) -> GridFunction:
    """Convolution ``nu * f``: coefficientwise product with ``nu_hat``."""
    return f.with_coefficients(f.coeffs * multiplier(m, f.degree))


# ---------------------------------------------------------------------------
# Nonnegative densities from convex sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexConstruction:
    """Nonnegative density built from a convex sequence, truncated at degree ``T``.

    Attributes
    ----------
    density : GridFunction
        Unnormalized density ``C + sum_{n>=N} b_n cos(2 pi n x)``.
    constant : float
        The shift ``C`` (0 when the sequence starts at index 0).
    mass : float
        ``integral f``: ``C``, or ``b_0/2`` when ``N = 0``.
    grid_min : float
        Minimum of the density on its grid.
    tail_deviation : float
        ``max_n |b_n - a_n|`` over the represented frequencies; the truncated
        coefficients fall short of ``a_n`` by the linear interpolant of the
        sequence through ``T+1`` and ``T+2``.
    """

    density: GridFunction
    constant: float
    mass: float
    grid_min: float
    tail_deviation: float

    @property
    def normalized(self) -> GridFunction:
        return self.density.with_coefficients(self.density.coeffs / self.mass)

    def as_dict(self):
        return {"constant": self.constant, "mass": self.mass, "grid_min": self.grid_min,
                "tail_deviation": self.tail_deviation,
                "degree": self.density.degree, "grid": self.density.M}


def fejer_truncation(a_ext: np.ndarray, T: int) -> np.ndarray:
    """Cosine coefficients of ``sum_{n<=T} (n+1) Delta^2 a_n K_n / 2``.

    For a convex sequence decreasing to zero the full sum is
    ``a_0/2 + sum a_n cos(2 pi n x)``. Stopping at ``n = T`` keeps every
    weight nonnegative, so the result is nonnegative exactly. Its coefficient
    at ``k <= T`` is ``sum_{n=k}^{T} (n+1-k) Delta^2 a_n``, which equals
    ``a_k`` minus the line through ``(T+1, a_{T+1})`` and ``(T+2, a_{T+2})``.

    Returns ``b_0 .. b_T``.
    """
    a = np.asarray(a_ext[: T + 3], dtype=float)
    w = a[:-2] - 2.0 * a[1:-1] + a[2:]          # Delta^2 a_n, n = 0..T
    n = np.arange(T + 1, dtype=float)
    tail_w = np.cumsum(w[::-1])[::-1]            # sum_{n>=k} w_n
    tail_nw = np.cumsum(((n + 1) * w)[::-1])[::-1]
    return tail_nw - n * tail_w


def build_nonneg_from_convex(c: ConvexSeq, N_trunc: int, M: int | None = None) -> ConvexConstruction:
    """Nonnegative function whose cosine coefficients follow a convex sequence.

    With ``a'`` the backward linear extension of ``a`` to index 0, the
    function ``a'_0/2 + sum_{n>=1} a'_n cos(2 pi n x)`` is half the sum of
    the Fejer kernels ``K_n`` weighted by ``(n+1) Delta^2 a'_n``. The sum is
    stopped at ``n = N_trunc`` (see :func:`fejer_truncation`), the part below
    the start index is removed and ``C``, the supremum of that part, is added.
    Each step preserves nonnegativity, so the sampled density is nonnegative
    up to rounding.
    """
    from .measures import cosine_sup

    T = check_positive_int(N_trunc, "N_trunc")
    if T < c.start:
        raise ValueError("truncation degree below the start index")
    M = M or _grid_size(T, factor=4)
    b = fejer_truncation(c.extended(T + 2), T)
    N = c.start
    half = b / 2.0
    if N == 0:
        constant, mass = 0.0, float(half[0])
    else:
        low = half[:N].copy()
        low[1:] *= 2.0                      # back to cosine coefficients
        constant = cosine_sup(low)
        half[:N] = 0.0
        half[0] = constant
        mass = constant
    coeffs = np.concatenate([half[:0:-1], half]).astype(complex)
    g = GridFunction(coeffs, M)
    lo = max(N, 1)
    dev = float(np.max(np.abs(b[lo:] - c(np.arange(lo, T + 1))), initial=0.0))
    return ConvexConstruction(g, float(constant), float(mass), float(g.samples.min()), dev)


def density_of(m: TrigPolynomialMeasure, M: int | None = None) -> GridFunction:
    """Density of a trigonometric-polynomial measure as a GridFunction."""
    t = m.table
    coeffs = np.concatenate([t[:0:-1], t]).astype(complex)
    return GridFunction(coeffs, M or _grid_size(m.degree, factor=4))


# ---------------------------------------------------------------------------
# The product pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairMember:
    measure: TrigPolynomialMeasure
    constant: float
    raw_min: float
    grid_min: float
    check_min: float

    def as_dict(self):
        return {"constant": self.constant, "raw_min": self.raw_min, "grid_min": self.grid_min,
                "check_min": self.check_min, "degree": self.measure.degree}


def _shifted_member(half: np.ndarray, member: int, degree: int, margin: float, tol: float):
    M = _grid_size(degree, factor=8)
    coeffs = np.concatenate([half[:0:-1], half]).astype(complex)
    raw = GridFunction(coeffs, M)
    raw_min = float(raw.samples.min())
    C = (1.0 + margin) * max(0.0, -raw_min)
    if not C > 0:
        raise SpecError("odd/even series has nonnegative minimum; no shift defined")
    shifted = coeffs.copy()
    shifted[degree] += C
    dens = GridFunction(shifted, M)
    gmin = float(dens.samples.min())
    check = float(dens.samples_on(2 * M).min())
    if min(gmin, check) < -tol * C:
        raise SpecError(f"member {member}: density minimum {min(gmin, check):.3e} below tolerance "
                        "after the constant shift")
    table = np.zeros(degree + 1)
    table[0] = 1.0
    table[1:] = half[1:] / C
    spec = {"kind": "product_pair", "member": member, "degree": degree}
    return PairMember(TrigPolynomialMeasure(table, spec), C, raw_min, gmin, check)


@functools.lru_cache(maxsize=8)
def product_pair_details(degree: int, margin: float = 0.01, tol: float = 1e-9):
    """Both members with their constants and grid diagnostics.

    Member 1 has density ``C_1 + sum_{odd 3<=n<=T} cos(2 pi n x)/log n`` and
    member 2 ``C_2 + sum_{1<=n<=T/2} cos(4 pi n x)/log(2n)``. Each constant is
    the negated grid minimum of the series plus a relative ``margin``.

    The odd series changes sign under ``x -> x + 1/2``, so its minimum tends
    to minus infinity as ``T`` grows. The constant therefore depends on the
    truncation degree, and only finite degrees are supported.
    """
    T = check_positive_int(degree, "degree", 4)
    n = np.arange(0, T + 1)
    odd = np.zeros(T + 1)
    mask = (n % 2 == 1) & (n >= 3)
    odd[mask] = 0.5 / np.log(n[mask])
    even = np.zeros(T + 1)
    mask = (n % 2 == 0) & (n >= 2)
    even[mask] = 0.5 / np.log(n[mask])
    return (_shifted_member(odd, 1, T, margin, tol), _shifted_member(even, 2, T, margin, tol))


def product_pair(degree: int):
    """Two densities with disjoint frequency supports, so their convolution
    is Lebesgue measure, while neither is hyperbounded by itself."""
    a, b = product_pair_details(int(degree))
    return a.measure, b.measure


# ---------------------------------------------------------------------------
# Ergodicity and norm lower bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UEReport:
    margin: float
    argmin: int
    uniformly_ergodic: bool
    N: int
    caveat: str = "only frequencies 0 < |n| <= N were inspected"

    def as_dict(self):
        return dict(self.__dict__)


def uniform_ergodicity_check(m: SpectralMeasure, N: int = 10_000, tol: float = 1e-12) -> UEReport:
    """``min_{0<|n|<=N} |nu_hat(n) - 1|``; a positive infimum over all
    ``n != 0`` is equivalent to uniform ergodicity in ``L^2``."""
    N = check_positive_int(N, "N")
    n = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
    gap = np.abs(m.coefficients(n) - 1.0)
    i = int(np.argmin(gap))
    return UEReport(float(gap[i]), int(n[i]), bool(gap[i] > tol), N)


@dataclass(frozen=True)
class NormLowerBound:
    value: float
    witness: str
    quadrature_error: float
    p: float
    q: float
    N: int
    evaluated: int

    def as_dict(self):
        return dict(self.__dict__)


def _ratio(m, f: GridFunction, p, q, M):
    g = apply_multiplier(m, f)
    den = f.norm(p, M)
    if den == 0:
        return 0.0, 0.0
    num, err = g.norm_with_error(q, M)
    return num / den, err / den


def multiplier_norm_lower_bound(m: SpectralMeasure, p: float, q: float, N: int = 256,
                                shifts=(0, 1, 2), B: int = 3, n_random: int = 4,
                                seed: int = 0) -> NormLowerBound:
    """Lower bound on ``||f -> nu * f||_{L^p -> L^q}`` from test functions.

    The family consists of constants, ``e(ax) D_M(bx)`` for ``M`` a power of
    two up to ``N``, ``a`` in ``shifts``, ``1 <= b <= B``, and ``n_random``
    random polynomials per degree (seeded by ``(seed, M)``). The family for a
    larger ``N`` contains the family for a smaller one, so the bound is
    non-decreasing in ``N``.
    """
    p = check_exponent(p, "p", 1.0, math.inf, include_high=False)
    q = check_exponent(q, "q", p, math.inf, include_low=False, include_high=False)
    N = check_positive_int(N, "N")
    best, witness, best_err = 1.0, "constant", 0.0
    count = 1
    M = 1
    while M <= N:
        for b in range(1, B + 1):
            for a in shifts:
                deg = b * M + abs(a)
                c = np.zeros(2 * deg + 1, dtype=complex)
                c[deg + a + b * np.arange(-M, M + 1)] = 1.0
                f = GridFunction(c, _grid_size(deg, 1, 16))
                r, err = _ratio(m, f, p, q, _grid_size(deg, 8))
                count += 1
                if r > best:
                    best, witness, best_err = r, f"e({a}x) D_{M}({b}x)", err
        rng = np.random.default_rng([seed, M])
        for j in range(n_random):
            half = rng.standard_normal(M + 1) + 1j * rng.standard_normal(M + 1)
            half[0] = half[0].real
            c = np.concatenate([np.conj(half[:0:-1]), half])
            f = GridFunction(c, _grid_size(M, 1, 16))
            r, err = _ratio(m, f, p, q, _grid_size(M, 8))
            count += 1
            if r > best:
                best, witness, best_err = r, f"random degree {M} #{j}", err
        M *= 2
    return NormLowerBound(float(best), witness, float(best_err), p, q, N, count)
