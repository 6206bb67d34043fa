"""Probability measures on the circle given by Fourier-Stieltjes coefficients.

The circle is the interval ``[0, 1)`` with characters ``e(x) = exp(2 pi i x)``
and coefficients

    nu_hat(n) = integral of e(-n x) d nu(x).

Every measure exposes a vectorized :meth:`SpectralMeasure.coefficients`
method and a scalar, memoized :meth:`SpectralMeasure.coefficient`.
Measures are immutable after construction.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._validation import as_int_array, check_positive_int, require_keys
from .exceptions import OutOfRangeError, SpecError

# Largest frequency we let a lacunary rule generate; keeps all integer
# arithmetic inside int64 with room for sums of a few dozen terms.
_FREQ_LIMIT = 2 ** 58


def e(x):
    """The character ``exp(2 pi i x)``."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Sequence rules
# ---------------------------------------------------------------------------

_RULES = ("inv_log", "power", "geometric", "constant", "values")


@dataclass(frozen=True)
class SequenceRule:
    """A real sequence ``k -> value`` described by a closed-form rule.

    Rules
    -----
    ``inv_log``
        ``scale / log(mult * k + shift) ** exponent`` (``exponent`` and
        ``mult`` default to 1).
    ``power``
        ``scale * (k + shift) ** exponent``.
    ``geometric``
        ``scale * ratio ** k``.
    ``constant``
        ``scale`` for every index.
    ``values``
        an explicit finite list indexed from ``offset``; indices past the end
        evaluate to 0.
    """

    rule: str
    scale: float = 1.0
    shift: float = 0.0
    exponent: float = 1.0
    ratio: float = 0.5
    values: tuple = ()
    offset: int = 0
    mult: float = 1.0

    def __post_init__(self):
        if self.rule not in _RULES:
            raise SpecError(f"unknown sequence rule {self.rule!r}; expected one of {_RULES}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def finite(self) -> bool:
        return self.rule == "values"

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.rule == "inv_log":
            arg = self.mult * k + self.shift
            if np.any(arg <= 1.0):
                raise SpecError("inv_log rule needs mult * k + shift > 1")
            return self.scale / np.log(arg) ** self.exponent
        if self.rule == "power":
            arg = k + self.shift
            if np.any(arg <= 0.0):
                raise SpecError("power rule needs k + shift > 0")
            return self.scale * arg ** self.exponent
        if self.rule == "geometric":
            return self.scale * self.ratio ** k
        if self.rule == "constant":
            return np.full(k.shape, self.scale)
        idx = k.astype(np.int64) - self.offset
        vals = np.asarray(self.values + (0.0,))
        safe = np.where((idx >= 0) & (idx < len(self.values)), idx, len(self.values))
        return vals[safe]

    @classmethod
    def from_spec(cls, spec) -> "SequenceRule":
        if isinstance(spec, (list, tuple)):
            return cls("values", values=tuple(spec), offset=1)
        require_keys(spec, ["rule"], "sequence rule")
        known = {"rule", "scale", "shift", "exponent", "ratio", "values", "offset", "mult"}
        extra = set(spec) - known
        if extra:
            raise SpecError(f"sequence rule: unknown field(s) {sorted(extra)}")
        return cls(**spec)

    def to_spec(self) -> dict:
        defaults = SequenceRule(self.rule)
        out = {"rule": self.rule}
        for name in ("scale", "shift", "exponent", "ratio", "offset", "mult"):
            if getattr(self, name) != getattr(defaults, name):
                out[name] = getattr(self, name)
        if self.values:
            out["values"] = list(self.values)
        return out

    def describe(self) -> str:
        if self.rule == "inv_log":
            pw = "" if self.exponent == 1 else f"^{self.exponent:g}"
            k = "k" if self.mult == 1 else f"{self.mult:g}k"
            return f"{self.scale:g}/log({k}+{self.shift:g}){pw}"
        if self.rule == "power":
            return f"{self.scale:g}*(k+{self.shift:g})^{self.exponent:g}"
        if self.rule == "geometric":
            return f"{self.scale:g}*{self.ratio:g}^k"
        if self.rule == "constant":
            return f"{self.scale:g}"
        return f"values{list(self.values)}"


# ---------------------------------------------------------------------------
# Riesz products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RieszSpec:
    """Lacunary frequencies and coefficients of a Riesz product.

    Parameters
    ----------
    frequencies : SequenceRule or sequence of int
        ``n_1 < n_2 < ...``; a rule is evaluated at ``k = 1, 2, ...``.
    coefficients : SequenceRule or sequence of float
        ``a_1, a_2, ...`` with ``0 < |a_k| <= 1``.
    q : float, optional
        Lacunarity ratio; defaults to the smallest observed ratio
        ``n_{k+1}/n_k``. Must exceed 3.
    depth : int, optional
        If given, only the first ``depth`` factors are kept and the measure is
        the finite product (exact at every frequency). Otherwise the product
        is infinite and the depth is chosen per request.
    max_depth : int
        Cap on the automatic depth for infinite products.
    """

    frequencies: object
    coefficients: object
    q: float | None = None
    depth: int | None = None
    max_depth: int = 40
    _n: np.ndarray = field(init=False, repr=False, compare=False)
    _a: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        freqs = self.frequencies
        if not isinstance(freqs, SequenceRule):
            freqs = SequenceRule("values", values=tuple(freqs), offset=1)
        coefs = self.coefficients
        if not isinstance(coefs, SequenceRule):
            coefs = SequenceRule("values", values=tuple(coefs), offset=1)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "coefficients", coefs)

        if freqs.finite:
            count = len(freqs.values)
        else:
            count = self.max_depth
        if self.depth is not None:
            check_positive_int(self.depth, "depth")
            if self.depth > count:
                raise SpecError(f"depth {self.depth} exceeds the {count} available frequencies")
            count = self.depth
        if count < 1:
            raise SpecError("a Riesz product needs at least one factor")

        raw = _integer_terms(freqs, count)
        stop = next((i for i, v in enumerate(raw) if v > _FREQ_LIMIT), len(raw))
        if stop == 0:
            raise SpecError("first frequency is out of range")
        if stop < count and (self.depth is not None or freqs.finite):
            raise SpecError(f"frequency n_{stop + 1} exceeds the supported limit 2^58")
        n = np.array(raw[:stop], dtype=np.int64)
        if np.any(n < 1):
            raise SpecError("Riesz frequencies must be positive integers")
        a = np.asarray(coefs(np.arange(1, len(n) + 1)), dtype=float)
        if coefs.finite and len(coefs.values) < len(n):
            raise SpecError("fewer Riesz coefficients than frequencies")
        if np.any(a == 0) or np.any(np.abs(a) > 1) or not np.all(np.isfinite(a)):
            raise SpecError("Riesz coefficients must satisfy 0 < |a_k| <= 1")
        ratios = n[1:] / n[:-1] if len(n) > 1 else np.array([np.inf])
        q = self.q
        if q is None:
            q = float(np.min(ratios)) if len(n) > 1 else 4.0
        if not q > 3:
            raise SpecError(f"lacunarity ratio q={q} must exceed 3")
        if len(n) > 1 and np.any(n[1:] < q * n[:-1] * (1 - 1e-15)):
            j = int(np.argmax(n[1:] < q * n[:-1] * (1 - 1e-15)))
            raise SpecError(f"lacunarity violated: n_{j + 2}={n[j + 1]} < q*n_{j + 1}={q * n[j]}")
        object.__setattr__(self, "q", float(q))
        object.__setattr__(self, "_n", n)
        object.__setattr__(self, "_a", a)

    # -- structure ---------------------------------------------------------
    @property
    def finite(self) -> bool:
        """Whether the product has finitely many factors."""
        return self.depth is not None or self.frequencies.finite

    @property
    def available_depth(self) -> int:
        return len(self._n)

    def freqs(self, K: int | None = None) -> np.ndarray:
        return self._n[: self.available_depth if K is None else K].copy()

    def coefs(self, K: int | None = None) -> np.ndarray:
        return self._a[: self.available_depth if K is None else K].copy()

    def evaluation_bound(self, K: int) -> float:
        """Largest ``|m|`` whose coefficient depends only on the first ``K``
        factors. Infinite for finite products at full depth."""
        if self.finite and K >= self.available_depth:
            return math.inf
        if K >= self.available_depth:
            raise OutOfRangeError(f"depth {K} exceeds the {self.available_depth} tabulated factors")
        return float(int(self._n[K]) - int(self._n[:K].sum()) - 1)

    def depth_for(self, bound) -> int:
        """Smallest depth ``K`` whose evaluation bound covers ``|m| <= bound``."""
        bound = abs(int(bound))
        if self.finite:
            return self.available_depth
        for K in range(0, self.available_depth):
            if self.evaluation_bound(K) >= bound:
                return K
        raise OutOfRangeError(
            f"|m|={bound} exceeds the representable bound "
            f"{self.evaluation_bound(self.available_depth - 1):.0f} of this Riesz product"
        )

    def to_spec(self) -> dict:
        out = {
            "kind": "riesz",
            "frequencies": (
                [int(v) for v in self.frequencies.values]
                if self.frequencies.finite and self.frequencies.offset == 1
                else self.frequencies.to_spec()
            ),
            "coefficients": (
                list(self.coefficients.values)
                if self.coefficients.finite and self.coefficients.offset == 1
                else self.coefficients.to_spec()
            ),
            "q": self.q,
        }
        if self.depth is not None:
            out["depth"] = self.depth
        if self.max_depth != 40:
            out["max_depth"] = self.max_depth
        return out


def _integer_terms(rule: SequenceRule, count: int) -> list:
    """First ``count`` terms of an integer-valued rule, exactly.

    Geometric rules with integral scale and ratio are evaluated in Python
    integers; anything else must round-trip through float without loss.
    """
    if rule.rule == "geometric" and float(rule.scale).is_integer() and float(rule.ratio).is_integer():
        s, r = int(rule.scale), int(rule.ratio)
        return [s * r ** k for k in range(1, count + 1)]
    raw = np.asarray(rule(np.arange(1, count + 1)), dtype=float)
    out = []
    for v in raw:
        if not math.isfinite(v):
            out.append(math.inf)
            continue
        if v > 2 ** 53 or abs(v - round(v)) > 1e-9 * max(1.0, abs(v)):
            if v > _FREQ_LIMIT:
                out.append(int(v))
                continue
            raise SpecError(f"Riesz frequency {v!r} is not an exactly representable integer")
        out.append(int(round(v)))
    return out


def _greedy_signs(n: np.ndarray, m: np.ndarray):
    """Forced-choice signed-digit expansion of each entry of ``m``.

    Returns ``(eps, remainder)`` where ``eps`` has shape ``m.shape + (K,)``.
    """
    r = m.astype(np.int64).copy()
    eps = np.zeros(m.shape + (len(n),), dtype=np.int8)
    for j in range(len(n) - 1, -1, -1):
        nj = int(n[j])
        take = 2 * np.abs(r) > nj
        s = np.where(take, np.sign(r), 0).astype(np.int64)
        eps[..., j] = s
        r = r - s * nj
    return eps, r


def riesz_decompose(spec: RieszSpec, m: int):
    """Signed expansion ``m = sum_j eps_j n_j`` with ``eps_j`` in {-1, 0, 1}.

    Returns
    -------
    tuple of int or None
        ``(eps_1, ..., eps_J)`` trimmed after the last nonzero entry (empty
        for ``m = 0``), or ``None`` when ``m`` has no such expansion.

    Raises
    ------
    OutOfRangeError
        If ``|m|`` is beyond the representable bound of the deepest
        tabulated factor of an infinite product.
    """
    m = int(m)
    K = spec.depth_for(abs(m))
    eps, r = _greedy_signs(spec.freqs(K), np.asarray([m]))
    if r[0] != 0:
        return None
    out = [int(v) for v in eps[0]]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def riesz_enumerate(spec: RieszSpec, K: int) -> dict:
    """Brute force over all ``3**K`` sign vectors.

    Returns a mapping ``m -> eps`` over the representable set of the first
    ``K`` factors. Used as an oracle for the greedy decomposition.
    """
    n = spec.freqs(K)
    table = {}
    for eps in itertools.product((-1, 0, 1), repeat=K):
        m = int(sum(int(e_) * int(nj) for e_, nj in zip(eps, n)))
        if m in table:
            raise AssertionError(f"{m} has two expansions; lacunarity too weak")
        table[m] = eps
    return table


# ---------------------------------------------------------------------------
# Convex sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexSeq:
    """A nonnegative convex sequence ``a_N, a_{N+1}, ...`` decreasing to 0.

    Parameters
    ----------
    tail : SequenceRule
        Rule evaluated at the index ``n`` itself.
    start : int
        First index ``N`` of the sequence.
    head : tuple of float
        Optional explicit values ``a_N, ..., a_{N+len(head)-1}`` overriding
        the rule.
    check_length : int
        Number of indices over which positivity, monotonicity and convexity
        are verified at construction.
    """

    tail: SequenceRule
    start: int = 0
    head: tuple = ()
    check_length: int = 4096

    def __post_init__(self):
        if not isinstance(self.tail, SequenceRule):
            object.__setattr__(self, "tail", SequenceRule.from_spec(self.tail))
        if isinstance(self.start, bool) or int(self.start) != self.start or self.start < 0:
            raise SpecError(f"start index must be a nonnegative integer, got {self.start!r}")
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "head", tuple(float(v) for v in self.head))
        if self.tail.finite:
            raise SpecError("a convex sequence needs an infinite tail rule")
        a = self(np.arange(self.start, self.start + self.check_length + 2))
        if not a[0] > 0 or np.any(a < 0) or not np.all(np.isfinite(a)):
            raise SpecError("convex sequence values must be nonnegative, finite and start positive")
        d2 = second_difference(a)
        tol = 1e-13 * np.abs(a[:-2]) + 1e-300
        if np.any(d2 < -tol):
            i = int(np.argmax(d2 < -tol)) + self.start
            raise SpecError(f"convexity violated at n={i}: second difference {d2[i - self.start]:.3e}")
        if np.any(np.diff(a) > tol[0]):
            raise SpecError("convex sequence must be non-increasing")

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if np.any(n < self.start):
            raise ValueError("index below the start of the sequence")
        out = np.asarray(self.tail(n), dtype=float)
        if self.head:
            h = np.asarray(self.head)
            pos = n - self.start
            inside = pos < len(h)
            out = np.where(inside, h[np.minimum(pos, len(h) - 1)], out)
        return out

    def extended(self, n_max: int) -> np.ndarray:
        """Values ``a_0..a_{n_max}`` with indices below ``start`` filled by
        the backward linear extension ``a_n = a_N + (N - n)(a_N - a_{N+1})``."""
        N = self.start
        idx = np.arange(0, n_max + 1)
        out = np.empty(n_max + 1)
        hi = idx >= N
        out[hi] = self(idx[hi])
        if N > 0:
            aN, aN1 = self(np.array([N, N + 1]))
            lo = ~hi
            out[lo] = aN + (N - idx[lo]) * (aN - aN1)
        return out

    def to_spec(self) -> dict:
        out = {"sequence": self.tail.to_spec(), "start": self.start}
        if self.head:
            out["head"] = list(self.head)
        return out


def second_difference(a) -> np.ndarray:
    """``a_n + a_{n+2} - 2 a_{n+1}`` for consecutive entries."""
    a = np.asarray(a, dtype=float)
    return a[:-2] + a[2:] - 2.0 * a[1:-1]


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


class SpectralMeasure:
    """Base class: a probability measure known through its coefficients."""

    kind = "abstract"

    def __init__(self):
        self._memo = {}

    def _coefficients(self, n: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def coefficients(self, n) -> np.ndarray:
        """Vectorized ``nu_hat(n)`` for an integer array ``n``."""
        arr = as_int_array(n)
        return np.asarray(self._coefficients(arr.reshape(-1)), dtype=complex).reshape(arr.shape)

    def coefficient(self, n: int) -> complex:
        """Scalar ``nu_hat(n)``, memoized per measure."""
        n = int(n)
        hit = self._memo.get(n)
        if hit is None:
            hit = complex(self.coefficients(np.array([n]))[0])
            self._memo[n] = hit
        return hit

    def abs_coefficients(self, n) -> np.ndarray:
        return np.abs(self.coefficients(n))

    def support_hint(self):
        """Sorted nonnegative frequencies outside which coefficients vanish,
        or ``None`` when the support is not sparse/finite."""
        return None

    def to_spec(self) -> dict:  # pragma: no cover
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()})"

    def __eq__(self, other):
        return isinstance(other, SpectralMeasure) and self.to_spec() == other.to_spec()

    def __hash__(self):
        return hash(repr(self.to_spec()))


class Lebesgue(SpectralMeasure):
    kind = "lebesgue"

    def _coefficients(self, n):
        return (n == 0).astype(complex)

    def support_hint(self):
        return np.array([0])

    def to_spec(self):
        return {"kind": "lebesgue"}


class Dirac(SpectralMeasure):
    kind = "dirac"

    def __init__(self, x0: float = 0.0):
        super().__init__()
        x0 = float(x0)
        if not (0.0 <= x0 < 1.0):
            raise SpecError(f"dirac point x0={x0} must lie in [0, 1)")
        self.x0 = x0

    def _coefficients(self, n):
        # Reduce n*x0 modulo 1 in extended precision-free form: n*x0 is exact
        # enough for |n| < 2**40 at double precision.
        phase = np.mod(n.astype(float) * self.x0, 1.0)
        return np.exp(-2j * np.pi * phase)

    def to_spec(self):
        return {"kind": "dirac", "x0": self.x0}


class Cantor(SpectralMeasure):
    """Cantor measure on ``[0, 1/2]``: ``x = sum_k d_k 3**-k`` with fair
    digits ``d_k`` in {0, 1}.

    Its coefficients are

        nu_hat(n) = (-i)**n * prod_{k>=1} cos(pi n / 3**k),

    which makes ``nu_hat(3n) = nu_hat(n)`` exact.
    """

    kind = "cantor"
    #: truncation target for the certified tail perturbation
    tail_tolerance = 1e-17
    #: largest supported |n|; keeps 2*3**k inside int64
    max_frequency = 10 ** 12

    def _coefficients(self, n):
        a = np.abs(n)
        if a.size and int(a.max()) > self.max_frequency:
            raise OutOfRangeError(f"cantor coefficients supported for |n| <= {self.max_frequency}")
        amax = float(a.max()) if a.size else 0.0
        # Factors past k0 satisfy |1 - cos(t)| <= t**2/2 with t = pi n 3**-k;
        # their total log-perturbation is below (pi n)**2 9**-k0 / 16.
        k0 = 1
        while (math.pi * amax) ** 2 * 9.0 ** (-k0) / 16.0 >= self.tail_tolerance:
            k0 += 1
        prod = np.ones(a.shape)
        for k in range(1, k0 + 1):
            p = 3 ** k
            r = np.mod(a, 2 * p)  # exact integer reduction of the argument
            prod *= np.cos(np.pi * r / p)
        phase = np.array([1, -1j, -1, 1j])[np.mod(a, 4)]
        out = phase * prod
        return np.where(n < 0, np.conj(out), out)

    def tail_bound(self, n: int) -> tuple[int, float]:
        """Truncation depth and certified bound on the neglected factors."""
        a = abs(int(n))
        k0 = 1
        while (math.pi * a) ** 2 * 9.0 ** (-k0) / 16.0 >= self.tail_tolerance:
            k0 += 1
        return k0, (math.pi * a) ** 2 * 9.0 ** (-k0) / 16.0

    def to_spec(self):
        return {"kind": "cantor"}


class Riesz(SpectralMeasure):
    """Riesz product ``prod_k (1 + a_k cos(2 pi n_k x))``."""

    kind = "riesz"

    def __init__(self, spec: RieszSpec):
        super().__init__()
        self.spec = spec

    def _coefficients(self, m):
        if m.size == 0:
            return np.zeros(0, dtype=complex)
        K = self.spec.depth_for(int(np.abs(m).max()))
        n = self.spec.freqs(K)
        half = self.spec.coefs(K) / 2.0
        r = m.copy()
        val = np.ones(m.shape)
        for j in range(K - 1, -1, -1):
            take = 2 * np.abs(r) > n[j]
            r = np.where(take, r - np.sign(r) * n[j], r)
            val = np.where(take, val * half[j], val)
        return np.where(r == 0, val, 0.0).astype(complex)

    def support_hint(self):
        spec = self.spec
        if not spec.finite:
            return None
        table = riesz_enumerate(spec, spec.available_depth) if spec.available_depth <= 12 else None
        if table is None:
            return None
        return np.array(sorted(m for m in table if m >= 0))

    def representable(self, max_abs: int) -> np.ndarray:
        """All nonnegative representable frequencies ``<= max_abs``, sorted."""
        spec = self.spec
        K = spec.depth_for(max_abs) if not spec.finite else spec.available_depth
        n = spec.freqs(K)
        vals = np.array([0], dtype=np.int64)
        for nj in n:
            vals = np.concatenate([vals - nj, vals, vals + nj])
            vals = vals[np.abs(vals) <= max_abs + int(n.sum())]
        vals = vals[(vals >= 0) & (vals <= max_abs)]
        return np.unique(vals)

    def to_spec(self):
        return self.spec.to_spec()


class ConvexAC(SpectralMeasure):
    """Absolutely continuous measure whose density is

        f(x) = C + sum_{n >= max(N, 1)} a_n cos(2 pi n x)  (+ a_0/2 if N = 0),

    normalized to unit mass, where ``C`` makes ``f`` nonnegative.

    The constant is ``C = sup_x |a'_0/2 + sum_{1<=n<N} a'_n cos(2 pi n x)|``
    for the backward linear extension ``a'`` of the sequence (``C = 0`` when
    ``N = 0``).
    """

    kind = "convex_ac"

    def __init__(self, seq: ConvexSeq):
        super().__init__()
        self.seq = seq
        self.constant = low_frequency_sup(seq) if seq.start > 0 else 0.0
        if seq.start == 0:
            self.mass = float(seq(np.array([0]))[0]) / 2.0
        else:
            self.mass = self.constant
        if not self.mass > 0:
            raise SpecError("density has zero mass; choose a larger start index")

    def _coefficients(self, n):
        a = np.abs(n)
        lo = max(self.seq.start, 1)
        out = np.zeros(n.shape, dtype=complex)
        mask = a >= lo
        if np.any(mask):
            out[mask] = self.seq(a[mask]) / (2.0 * self.mass)
        out[n == 0] = 1.0
        return out

    def to_spec(self):
        return {"kind": "convex_ac", **self.seq.to_spec()}


def low_frequency_sup(seq: ConvexSeq, oversample: int = 64) -> float:
    """``sup_x |a'_0/2 + sum_{1<=n<N} a'_n cos(2 pi n x)|`` for the backward
    linear extension ``a'``."""
    a = seq.extended(seq.start)[: seq.start].copy()
    a[0] /= 2.0
    return cosine_sup(a, oversample)


def cosine_sup(a, oversample: int = 64) -> float:
    """``sup_x |sum_k a_k cos(2 pi k x)|`` by a dense grid followed by
    bounded local refinement of the best grid points."""
    from scipy.optimize import minimize_scalar

    a = np.asarray(a, dtype=float)
    N = len(a)
    M = 1 << int(math.ceil(math.log2(max(64, oversample * N))))
    spec = np.zeros(M // 2 + 1)
    spec[:N] = a
    spec[1:N] /= 2.0  # cosine series -> real FFT convention
    vals = np.fft.irfft(spec, n=M) * M
    k = np.arange(N)

    def poly(x):
        return float(np.dot(a, np.cos(2 * np.pi * k * x)))

    best = float(np.max(np.abs(vals)))
    for i in np.argsort(-np.abs(vals))[:4]:
        x0 = i / M
        res = minimize_scalar(lambda x: -abs(poly(x)), bounds=(x0 - 1.0 / M, x0 + 1.0 / M),
                              method="bounded", options={"xatol": 1e-13})
        best = max(best, -float(res.fun))
    return best


class Convolution(SpectralMeasure):
    kind = "convolution"

    def __init__(self, left: SpectralMeasure, right: SpectralMeasure):
        super().__init__()
        self.left, self.right = left, right

    def _coefficients(self, n):
        return self.left.coefficients(n) * self.right.coefficients(n)

    def to_spec(self):
        return {"kind": "convolution", "left": self.left.to_spec(), "right": self.right.to_spec()}


class Power(SpectralMeasure):
    """``k``-fold convolution power."""

    kind = "power"

    def __init__(self, base: SpectralMeasure, k: int):
        super().__init__()
        self.base = base
        self.k = check_positive_int(k, "k")

    def _coefficients(self, n):
        return self.base.coefficients(n) ** self.k

    def to_spec(self):
        return {"kind": "power", "base": self.base.to_spec(), "k": self.k}


class Mixture(SpectralMeasure):
    kind = "mixture"

    def __init__(self, weights: Sequence[float], parts: Sequence[SpectralMeasure]):
        super().__init__()
        w = np.asarray(weights, dtype=float)
        if len(w) != len(parts) or len(w) == 0:
            raise SpecError("mixture needs one weight per part")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise SpecError(f"mixture weights must be nonnegative and sum to 1, got {w.tolist()}")
        self.weights = tuple(float(v) for v in w)
        self.parts = tuple(parts)

    def _coefficients(self, n):
        out = np.zeros(n.shape, dtype=complex)
        for w, part in zip(self.weights, self.parts):
            if w:
                out += w * part.coefficients(n)
        return out

    def to_spec(self):
        return {"kind": "mixture", "weights": list(self.weights),
                "parts": [p.to_spec() for p in self.parts]}


class Reflected(SpectralMeasure):
    """Image of ``base`` under ``x -> -x``; its coefficient at ``n`` is the
    base coefficient at ``-n`` (equivalently its complex conjugate)."""

    kind = "reflected"

    def __init__(self, base: SpectralMeasure):
        super().__init__()
        self.base = base

    def _coefficients(self, n):
        return self.base.coefficients(-n)

    def to_spec(self):
        return {"kind": "reflected", "base": self.base.to_spec()}


class TrigPolynomialMeasure(SpectralMeasure):
    """Absolutely continuous measure with a trigonometric polynomial density.

    ``table[k]`` holds the (real) coefficient at ``|n| = k``; ``table[0]``
    must be 1.
    """

    kind = "trig_polynomial"

    def __init__(self, table, spec: dict | None = None):
        super().__init__()
        t = np.asarray(table, dtype=float)
        if t.ndim != 1 or len(t) == 0 or abs(t[0] - 1.0) > 1e-12:
            raise SpecError("coefficient table must start with 1")
        self.table = t
        self._spec = spec

    @property
    def degree(self) -> int:
        return len(self.table) - 1

    def _coefficients(self, n):
        a = np.abs(n)
        out = np.zeros(n.shape, dtype=complex)
        mask = a <= self.degree
        out[mask] = self.table[a[mask]]
        return out

    def support_hint(self):
        return np.flatnonzero(self.table)

    def to_spec(self):
        if self._spec is not None:
            return dict(self._spec)
        return {"kind": self.kind, "table": self.table.tolist()}


# ---------------------------------------------------------------------------
# Spec parsing
# ---------------------------------------------------------------------------


def measure_from_spec(spec, where: str = "measure") -> SpectralMeasure:
    """Build a measure from a JSON-style dictionary.

    Composite kinds nest child specifications under ``left``/``right``,
    ``base`` or ``parts``.
    """
    require_keys(spec, ["kind"], where)
    kind = spec["kind"]
    try:
        if kind == "lebesgue":
            return Lebesgue()
        if kind == "dirac":
            return Dirac(spec.get("x0", 0.0))
        if kind == "cantor":
            return Cantor()
        if kind == "riesz":
            require_keys(spec, ["frequencies", "coefficients"], where)
            freqs = spec["frequencies"]
            coefs = spec["coefficients"]
            freqs = freqs if isinstance(freqs, list) else SequenceRule.from_spec(freqs)
            coefs = coefs if isinstance(coefs, list) else SequenceRule.from_spec(coefs)
            return Riesz(RieszSpec(freqs, coefs, q=spec.get("q"), depth=spec.get("depth"),
                                   max_depth=spec.get("max_depth", 40)))
        if kind == "convex_ac":
            require_keys(spec, ["sequence"], where)
            seq = ConvexSeq(SequenceRule.from_spec(spec["sequence"]), start=spec.get("start", 0),
                            head=tuple(spec.get("head", ())))
            return ConvexAC(seq)
        if kind == "convolution":
            require_keys(spec, ["left", "right"], where)
            return Convolution(measure_from_spec(spec["left"], where + ".left"),
                               measure_from_spec(spec["right"], where + ".right"))
        if kind == "power":
            require_keys(spec, ["base", "k"], where)
            return Power(measure_from_spec(spec["base"], where + ".base"), spec["k"])
        if kind == "mixture":
            require_keys(spec, ["weights", "parts"], where)
            parts = [measure_from_spec(p, f"{where}.parts[{i}]") for i, p in enumerate(spec["parts"])]
            return Mixture(spec["weights"], parts)
        if kind == "reflected":
            require_keys(spec, ["base"], where)
            return Reflected(measure_from_spec(spec["base"], where + ".base"))
        if kind == "product_pair":
            from .circle import product_pair

            require_keys(spec, ["member", "degree"], where)
            member = spec["member"]
            if member not in (1, 2):
                raise SpecError(f"{where}: member must be 1 or 2")
            return product_pair(spec["degree"])[member - 1]
        if kind == "trig_polynomial":
            require_keys(spec, ["table"], where)
            return TrigPolynomialMeasure(spec["table"])
    except SpecError as exc:
        if str(exc).startswith(where):
            raise
        raise SpecError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}") from exc
    raise SpecError(f"{where}: unknown measure kind {kind!r}")
