"""Finite-state bi-stochastic Markov operators.

An operator is a row-stochastic matrix ``S`` together with an invariant
probability vector ``mu`` (``mu S = mu``). It acts on functions by
``(Pf)_i = sum_j S_ij f_j``. Norms are weighted:
``||f||_p = (sum_i mu_i |f_i|^p)^(1/p)`` and ``||f||_inf = max |f_i|``.

Cyclic classes follow the operator convention ``P 1_{A_j} = 1_{A_{j+1}}``:
every transition from a state of ``A_{j+1}`` lands in ``A_j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from ._validation import check_exponent, check_positive_int, require_keys
from .exceptions import InvariantBreach, NotErgodicError, SpecError

DEFAULT_TOL = 1e-12


# ---------------------------------------------------------------------------
# Validation and the operator type
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    ergodic: bool
    n: int
    components: int
    violations: tuple

    def as_dict(self):
        return {"valid": self.valid, "ergodic": self.ergodic, "n": self.n,
                "components": self.components, "violations": [dict(v) for v in self.violations]}


def _support_graph(S, tol):
    return (np.asarray(S) > tol).astype(np.int8)


def validate(S, mu, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check the bi-stochastic invariants without raising.

    Violations are reported with the offending indices: negative entries,
    row sums away from 1, ``mu`` not positive or not summing to 1, and
    ``mu S != mu``. Ergodicity is strong connectivity of the support digraph.
    """
    S = np.asarray(S, dtype=float)
    mu = np.asarray(mu, dtype=float)
    viol = []
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        return ValidationReport(False, False, 0, 0, ({"kind": "shape", "shape": list(S.shape)},))
    n = S.shape[0]
    if mu.shape != (n,):
        return ValidationReport(False, False, n, 0, ({"kind": "mu_shape", "shape": list(mu.shape)},))
    if not np.all(np.isfinite(S)) or not np.all(np.isfinite(mu)):
        viol.append({"kind": "non_finite"})
    neg = np.argwhere(S < -tol)
    if len(neg):
        viol.append({"kind": "negative_entry", "indices": neg[:20].tolist()})
    rows = S.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > tol * n + tol)
    if len(bad):
        viol.append({"kind": "row_sum", "indices": bad[:20].tolist(), "values": rows[bad[:20]].tolist()})
    if np.any(mu <= 0):
        viol.append({"kind": "mu_nonpositive", "indices": np.flatnonzero(mu <= 0)[:20].tolist()})
    if abs(mu.sum() - 1.0) > tol * n + tol:
        viol.append({"kind": "mu_sum", "value": float(mu.sum())})
    inv = mu @ S - mu
    bad = np.flatnonzero(np.abs(inv) > tol * n + tol)
    if len(bad):
        viol.append({"kind": "not_invariant", "indices": bad[:20].tolist(),
                     "values": inv[bad[:20]].tolist()})
    ncomp, _ = connected_components(_support_graph(S, tol), directed=True, connection="strong")
    return ValidationReport(not viol, ncomp == 1, n, int(ncomp), tuple(viol))


@dataclass(frozen=True)
class FiniteBiStochasticOperator:
    """Markov operator on ``n`` weighted atoms.

    Construction validates the invariants and renormalizes rows so that
    ``P1 = 1`` holds to the last bit; invalid input raises :class:`SpecError`.
    """

    S: np.ndarray
    mu: np.ndarray
    tol: float = DEFAULT_TOL
    label: str = ""

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        mu = np.array(self.mu, dtype=float)
        rep = validate(S, mu, self.tol)
        if not rep.valid:
            raise SpecError(f"invalid operator: {list(rep.violations)}")
        S = np.clip(S, 0.0, None)
        S /= S.sum(axis=1, keepdims=True)
        S.setflags(write=False)
        mu = mu / mu.sum()
        mu.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.S.shape[0]

    def apply(self, f) -> np.ndarray:
        return self.S @ np.asarray(f)

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.S, int(k))

    def dual(self) -> "FiniteBiStochasticOperator":
        """Adjoint in ``L^2(mu)``: ``S*_ij = mu_j S_ji / mu_i``."""
        Sd = (self.S.T * self.mu[None, :]) / self.mu[:, None]
        return FiniteBiStochasticOperator(Sd, self.mu, self.tol, self.label + "*")

    def norm(self, f, p) -> float:
        return weighted_norm(f, self.mu, p)

    def mean(self, f) -> complex:
        return np.dot(self.mu, f)

    def report(self) -> ValidationReport:
        return validate(self.S, self.mu, self.tol)

    @property
    def ergodic(self) -> bool:
        return self.report().ergodic

    def to_spec(self) -> dict:
        return {"mu": self.mu.tolist(), "S": self.S.tolist()}


def weighted_norm(f, mu, p) -> float:
    f = np.abs(np.asarray(f))
    if math.isinf(p):
        return float(f.max())
    return float(np.dot(mu, f ** p) ** (1.0 / p))


def _same_space(a: FiniteBiStochasticOperator, b: FiniteBiStochasticOperator):
    if a.n != b.n or not np.allclose(a.mu, b.mu, atol=1e-12, rtol=0):
        raise SpecError("operators act on different state spaces")


def compose(a: FiniteBiStochasticOperator, b: FiniteBiStochasticOperator) -> FiniteBiStochasticOperator:
    """The product ``PQ`` (apply ``Q`` first)."""
    _same_space(a, b)
    return FiniteBiStochasticOperator(a.S @ b.S, a.mu, a.tol)


def symmetrize(a: FiniteBiStochasticOperator) -> FiniteBiStochasticOperator:
    """``(P + P*)/2``."""
    return FiniteBiStochasticOperator(0.5 * (a.S + a.dual().S), a.mu, a.tol)


def mix(ops, weights) -> FiniteBiStochasticOperator:
    """Convex combination ``sum_k w_k P_k``."""
    ops = list(ops)
    w = np.asarray(weights, dtype=float)
    if len(ops) != len(w) or len(ops) == 0:
        raise SpecError("mix needs one weight per operator")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise SpecError("mix weights must be a probability vector")
    for o in ops[1:]:
        _same_space(ops[0], o)
    return FiniteBiStochasticOperator(sum(wk * o.S for wk, o in zip(w, ops)), ops[0].mu, ops[0].tol)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def example2(n: int, noise: float = 0.0, seed: int = 0) -> FiniteBiStochasticOperator:
    """Uniform atoms, each half moved uniformly onto the other half.

    ``S_ij = 2/n`` when ``i`` and ``j`` lie in opposite halves. With
    ``noise > 0`` the cross blocks are mixed with random doubly stochastic
    blocks, which keeps the period equal to 2.
    """
    n = check_positive_int(n, "n", 2)
    if n % 2:
        raise SpecError("example2 needs an even number of states")
    m = n // 2
    B = np.full((m, m), 1.0 / m)
    B2 = B
    if noise:
        rng = np.random.default_rng(seed)
        B = (1 - noise) * B + noise * _random_doubly_stochastic(m, rng)
        B2 = (1 - noise) * np.full((m, m), 1.0 / m) + noise * _random_doubly_stochastic(m, rng)
    S = np.zeros((n, n))
    S[:m, m:] = B
    S[m:, :m] = B2
    return FiniteBiStochasticOperator(S, np.full(n, 1.0 / n), label=f"example2(n={n})")


def cycle(d: int) -> FiniteBiStochasticOperator:
    """Cyclic permutation on ``d`` states: ``(Pf)_i = f_{i-1}``, so
    ``P 1_{{j}} = 1_{{j+1}}``."""
    d = check_positive_int(d, "d")
    S = np.zeros((d, d))
    for i in range(d):
        S[i, (i - 1) % d] = 1.0
    return FiniteBiStochasticOperator(S, np.full(d, 1.0 / d), label=f"cycle(d={d})")


def swap() -> FiniteBiStochasticOperator:
    return FiniteBiStochasticOperator(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.5, 0.5]), label="swap")


def identity(n: int, mu=None) -> FiniteBiStochasticOperator:
    n = check_positive_int(n, "n")
    mu = np.full(n, 1.0 / n) if mu is None else np.asarray(mu, dtype=float)
    return FiniteBiStochasticOperator(np.eye(n), mu, label=f"identity(n={n})")


def rank_one(mu) -> FiniteBiStochasticOperator:
    """``S_ij = mu_j``: the expectation operator."""
    mu = np.asarray(mu, dtype=float)
    return FiniteBiStochasticOperator(np.tile(mu, (len(mu), 1)), mu, label="rank_one")


def _sinkhorn(K, r, c, iters=5000, tol=1e-15):
    u = np.ones(len(r))
    v = np.ones(len(c))
    for _ in range(iters):
        u = r / (K @ v)
        v = c / (K.T @ u)
        if np.max(np.abs(u * (K @ v) - r)) < tol:
            break
    return u[:, None] * K * v[None, :]


def _random_doubly_stochastic(m, rng):
    K = np.exp(rng.normal(0.0, 1.0, (m, m)))
    return _sinkhorn(K, np.ones(m), np.ones(m))


def random_block_cyclic(d: int, n: int | None = None, seed: int = 0, sizes=None,
                        uniform_mu: bool = False, laziness: float | None = None,
                        spread: float = 1.0) -> FiniteBiStochasticOperator:
    """Random ergodic operator whose support graph has period exactly ``d``.

    States are split into ``d`` classes; rows of class ``A_{j+1}`` are
    supported on ``A_j`` with strictly positive blocks fitted to the class
    masses by Sinkhorn scaling, so ``P 1_{A_j} = 1_{A_{j+1}}``. Each class has
    mass ``1/d``.

    Parameters
    ----------
    laziness : float, optional
        If given (classes must then have equal sizes), each block is
        ``(1 - laziness) * permutation + laziness * random``, which slows the
        within-class mixing.
    spread : float
        Standard deviation of the log-normal block entries.
    """
    d = check_positive_int(d, "d")
    rng = np.random.default_rng(seed)
    if sizes is None:
        n = n if n is not None else int(rng.integers(d, 10 * d + 1))
        if n < d:
            raise SpecError("need at least one state per class")
        if laziness is not None:
            if n % d:
                raise SpecError("laziness needs equal class sizes (d | n)")
            sizes = [n // d] * d
        else:
            cuts = np.sort(rng.choice(np.arange(1, n), size=d - 1, replace=False)) if d > 1 else []
            sizes = np.diff(np.concatenate([[0], cuts, [n]])).astype(int).tolist()
    sizes = [int(s) for s in sizes]
    n = sum(sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    blocks = [np.arange(starts[k], starts[k + 1]) for k in range(d)]
    mu = np.empty(n)
    for b in blocks:
        w = np.full(len(b), 1.0) if uniform_mu else rng.uniform(0.5, 1.5, len(b))
        mu[b] = w / w.sum() / d
    S = np.zeros((n, n))
    for j in range(d):
        rows, cols = blocks[(j + 1) % d], blocks[j]
        K = np.exp(rng.normal(0.0, spread, (len(rows), len(cols))))
        plan = _sinkhorn(K, mu[rows], mu[cols])
        block = plan / mu[rows][:, None]
        if laziness is not None:
            perm = np.eye(len(rows))[rng.permutation(len(rows))]
            if not uniform_mu:
                raise SpecError("laziness needs uniform_mu=True")
            block = (1 - laziness) * perm + laziness * block
        S[np.ix_(rows, cols)] = block
    # Relabel nothing: class of state 0 is A_0 by construction when d == 1;
    # otherwise class indices may be rotated, which period_and_classes fixes.
    return FiniteBiStochasticOperator(S, mu, label=f"random_block_cyclic(d={d}, seed={seed})")


def random_reversible_per_class(d: int, m: int, seed: int = 0, identity_weight=None,
                                n_perms: int = 3) -> FiniteBiStochasticOperator:
    """Periodic operator ``shift (x) B`` with ``B`` symmetric doubly stochastic.

    ``P^d`` acts as ``B^d`` on every class, a self-adjoint operator, so its
    norm on the mean-zero part equals its spectral radius.
    """
    rng = np.random.default_rng(seed)
    w0 = rng.uniform(0.3, 0.8) if identity_weight is None else identity_weight
    # the m-cycle keeps every class connected
    perms = [np.roll(np.eye(m), 1, axis=1)] + [np.eye(m)[rng.permutation(m)]
                                                for _ in range(n_perms - 1)]
    w = rng.dirichlet(np.ones(n_perms)) * (1 - w0)
    B = w0 * np.eye(m) + sum(wk * 0.5 * (Pk + Pk.T) for wk, Pk in zip(w, perms))
    shift = cycle(d).S
    S = np.kron(shift, B)
    n = d * m
    return FiniteBiStochasticOperator(S, np.full(n, 1.0 / n), label=f"reversible(d={d}, m={m}, seed={seed})")


def random_doubly_stochastic(n: int, seed: int = 0) -> FiniteBiStochasticOperator:
    """Strictly positive doubly stochastic matrix with uniform ``mu``."""
    rng = np.random.default_rng(seed)
    return FiniteBiStochasticOperator(_random_doubly_stochastic(n, rng), np.full(n, 1.0 / n),
                                      label=f"random_doubly_stochastic(n={n}, seed={seed})")


def operator_from_spec(spec, where: str = "operator") -> FiniteBiStochasticOperator:
    """Build an operator from a JSON-style dictionary (explicit or generator)."""
    if not isinstance(spec, dict):
        raise SpecError(f"{where}: expected an object")
    try:
        if "S" in spec or "mu" in spec:
            require_keys(spec, ["S", "mu"], where)
            return FiniteBiStochasticOperator(np.asarray(spec["S"], dtype=float),
                                              np.asarray(spec["mu"], dtype=float),
                                              spec.get("tol", DEFAULT_TOL))
        require_keys(spec, ["kind"], where)
        kind = spec["kind"]
        if kind == "example2":
            return example2(spec.get("n", 8), spec.get("noise", 0.0), spec.get("seed", 0))
        if kind == "cycle":
            return cycle(spec.get("d", 3))
        if kind == "swap":
            return swap()
        if kind == "identity":
            return identity(spec.get("n", 2), spec.get("mu"))
        if kind == "rank_one":
            mu = spec.get("mu")
            if mu is None:
                mu = np.full(check_positive_int(spec.get("n", 2), "n"), 1.0 / spec.get("n", 2))
            return rank_one(mu)
        if kind == "random_block_cyclic":
            require_keys(spec, ["d"], where)
            return random_block_cyclic(spec["d"], spec.get("n"), spec.get("seed", 0),
                                       spec.get("sizes"), spec.get("uniform_mu", False),
                                       spec.get("laziness"))
        if kind == "random_doubly_stochastic":
            return random_doubly_stochastic(spec.get("n", 4), spec.get("seed", 0))
        if kind == "mix":
            require_keys(spec, ["weights", "parts"], where)
            parts = [operator_from_spec(p, f"{where}.parts[{i}]") for i, p in enumerate(spec["parts"])]
            return mix(parts, spec["weights"])
        if kind == "compose":
            require_keys(spec, ["left", "right"], where)
            return compose(operator_from_spec(spec["left"], where + ".left"),
                           operator_from_spec(spec["right"], where + ".right"))
        if kind == "symmetrize":
            require_keys(spec, ["base"], where)
            return symmetrize(operator_from_spec(spec["base"], where + ".base"))
        if kind == "dual":
            require_keys(spec, ["base"], where)
            return operator_from_spec(spec["base"], where + ".base").dual()
    except SpecError as exc:
        if str(exc).startswith(where):
            raise
        raise SpecError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}") from exc
    raise SpecError(f"{where}: unknown operator kind {spec.get('kind')!r}")


# ---------------------------------------------------------------------------
# Period and cyclic classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CyclicDecomposition:
    """Period ``d``, class label per state and class masses."""

    d: int
    labels: np.ndarray
    masses: np.ndarray

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.labels == j % self.d)

    def indicator(self, j: int) -> np.ndarray:
        return (self.labels == j % self.d).astype(float)

    def as_dict(self):
        return {"d": self.d, "labels": self.labels.tolist(), "masses": self.masses.tolist(),
                "classes": [self.members(j).tolist() for j in range(self.d)]}


def graph_period(S, tol: float = DEFAULT_TOL) -> int:
    """gcd of cycle lengths of the support digraph (strongly connected)."""
    G = _support_graph(S, tol)
    order, _ = breadth_first_order(G, 0, directed=True, return_predecessors=True)
    level = np.full(len(G), -1)
    level[0] = 0
    for i in order:
        for j in np.flatnonzero(G[i]):
            if level[j] < 0:
                level[j] = level[i] + 1
    g = 0
    for i, j in zip(*np.nonzero(G)):
        g = math.gcd(g, int(level[i] + 1 - level[j]))
    return abs(g)


def period_and_classes(op: FiniteBiStochasticOperator) -> CyclicDecomposition:
    """Period and cyclic classes of an ergodic operator.

    The period is the gcd over edges ``i -> j`` of ``level(i) + 1 - level(j)``
    for breadth-first levels from state 0. State 0 is placed in ``A_0`` and
    ``A_j`` collects the states with ``level = -j (mod d)``.

    Raises
    ------
    NotErgodicError
        For reducible operators.
    InvariantBreach
        If the classes fail the support or mass cross-checks.
    """
    rep = op.report()
    if not rep.ergodic:
        raise NotErgodicError(f"operator has {rep.components} communicating classes; "
                              "analyze them separately")
    G = _support_graph(op.S, op.tol)
    order = breadth_first_order(G, 0, directed=True, return_predecessors=False)
    level = np.full(op.n, -1)
    level[0] = 0
    for i in order:
        nxt = np.flatnonzero(G[i])
        fresh = nxt[level[nxt] < 0]
        level[fresh] = level[i] + 1
    ii, jj = np.nonzero(G)
    d = int(reduce(math.gcd, (level[ii] + 1 - level[jj]).tolist(), 0)) or 1
    d = abs(d)
    labels = (-level) % d
    masses = np.array([op.mu[labels == j].sum() for j in range(d)])
    dec = CyclicDecomposition(d, labels, masses)
    # Cross-checks: P 1_{A_j} = 1_{A_{j+1}} and equal masses.
    for j in range(d):
        if np.max(np.abs(op.apply(dec.indicator(j)) - dec.indicator(j + 1))) > 1e-9:
            raise InvariantBreach(f"class A_{j} is not mapped onto A_{j + 1}")
    if np.max(np.abs(masses - 1.0 / d)) > 1e-9:
        raise InvariantBreach(f"class masses {masses.tolist()} differ from 1/{d}")
    return dec


def communicating_classes(op: FiniteBiStochasticOperator):
    """Strongly connected components (each is closed for a bi-stochastic
    operator). Returns a list of index arrays."""
    _, lab = connected_components(_support_graph(op.S, op.tol), directed=True, connection="strong")
    return [np.flatnonzero(lab == k) for k in range(lab.max() + 1)]


def restrict(op: FiniteBiStochasticOperator, states) -> FiniteBiStochasticOperator:
    """Operator restricted to a closed set of states, with renormalized mass."""
    states = np.asarray(states)
    sub = op.S[np.ix_(states, states)]
    return FiniteBiStochasticOperator(sub, op.mu[states] / op.mu[states].sum(), op.tol)


def projection_matrix(op: FiniteBiStochasticOperator, dec: CyclicDecomposition) -> np.ndarray:
    """Matrix of ``E_d f = sum_l (mu(A_l)^-1 int_{A_l} f dmu) 1_{A_l}``."""
    same = dec.labels[:, None] == dec.labels[None, :]
    return np.where(same, op.mu[None, :] / dec.masses[dec.labels][:, None], 0.0)


def projection_Ed(op: FiniteBiStochasticOperator, dec: CyclicDecomposition) -> FiniteBiStochasticOperator:
    """Conditional expectation on the cyclic-class algebra, as an operator."""
    return FiniteBiStochasticOperator(projection_matrix(op, dec), op.mu, op.tol, label="E_d")


def shift_matrix(dec: CyclicDecomposition, j: int, mu) -> np.ndarray:
    """Matrix of ``f -> sum_l (mu(A_l)^-1 int_{A_l} f) 1_{A_{l+j}}``."""
    tgt = dec.labels[:, None] == ((dec.labels[None, :] + j) % dec.d)
    return np.where(tgt, np.asarray(mu)[None, :] / dec.masses[dec.labels][None, :], 0.0)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormEstimate:
    """Result of an ``L^p -> L^q`` norm computation.

    ``exact`` marks closed-form values. Otherwise ``value`` is the best
    ratio found (a certified lower bound up to rounding) and ``agreeing``
    counts restarts that reached it within ``agree_tol``.
    """

    value: float
    witness: np.ndarray
    method: str
    exact: bool
    p: float
    q: float
    mean_zero: bool
    restarts: int = 0
    agreeing: int = 0
    spread: float = 0.0
    agree_tol: float = 1e-8

    @property
    def converged(self) -> bool:
        return self.exact or self.agreeing >= 2

    def as_dict(self):
        return {"value": self.value, "method": self.method, "exact": self.exact, "p": self.p,
                "q": self.q, "mean_zero": self.mean_zero, "restarts": self.restarts,
                "agreeing": self.agreeing, "spread": self.spread, "converged": self.converged,
                "witness": np.asarray(self.witness).tolist()}


def _sqrt_weighted(op):
    r = np.sqrt(op.mu)
    return (r[:, None] * op.S) / r[None, :], r


def power_iteration_norm(A: np.ndarray, proj: np.ndarray | None = None, iters: int = 20000,
                         tol: float = 1e-15, seed: int = 0):
    """Largest singular value of ``A @ proj`` by power iteration on
    ``(A proj)^T (A proj)``. Returns ``(sigma, right singular vector)``."""
    B = A if proj is None else A @ proj
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(B.shape[1])
    if proj is not None:
        x = proj @ x
    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0, x
    x /= nx
    prev = -1.0
    sigma = 0.0
    for it in range(iters):
        y = B.T @ (B @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0, x
        x = y / ny
        sigma = math.sqrt(ny)
        if abs(sigma - prev) <= tol * max(sigma, 1e-300) and it > 10:
            break
        prev = sigma
    return float(np.linalg.norm(B @ x)), x


def _l2_norm(op, mean_zero):
    A, r = _sqrt_weighted(op)
    proj = None
    if mean_zero:
        proj = np.eye(op.n) - np.outer(r, r)
    sigma, x = power_iteration_norm(A, proj)
    f = x / r
    return NormEstimate(sigma, f, "power_iteration", True, 2.0, 2.0, mean_zero)


def _abspow(x, a):
    """``|x|^a`` with fast paths for small integer exponents."""
    ax = np.abs(x)
    if a == 1:
        return ax
    if a == float(int(a)) and 2 <= a <= 6:
        out = ax
        for _ in range(int(a) - 1):
            out = out * ax
        return out
    return ax ** a


def _dual_map(u, mu, r):
    """Maximizer of ``<f, u>_mu`` over ``||f||_r <= 1`` (1 < r <= inf)."""
    if math.isinf(r):
        return np.sign(u)
    rp = r / (r - 1.0)
    scale = np.max(np.abs(u), axis=0, keepdims=True)
    scale[scale == 0] = 1.0
    v = u / scale
    g = np.sign(v) * _abspow(v, rp - 1.0)
    nrm = (mu @ _abspow(g, r)) ** (1.0 / r)
    nrm[nrm == 0] = 1.0
    return g / nrm


def _centering(u, mu, r):
    """Per column, the constant ``c`` minimizing ``||u - c||_{r'}`` where
    ``r' = r/(r-1)``; the dual map of ``u - c`` is then mean-zero."""
    rp = math.inf if r == 1 else (1.0 if math.isinf(r) else r / (r - 1.0))
    if rp == 2:
        return mu @ u
    lo = u.min(axis=0)
    hi = u.max(axis=0)
    if math.isinf(rp):
        return 0.5 * (lo + hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        v = u - mid
        if rp == 1:
            s = mu @ np.sign(v)
        else:
            s = mu @ (np.sign(v) * np.abs(v) ** (rp - 1))
        lo = np.where(s > 0, mid, lo)
        hi = np.where(s > 0, hi, mid)
    return 0.5 * (lo + hi)


def _ratios(S, F, mu, p, q):
    H = S @ F
    num = np.max(np.abs(H), axis=0) if math.isinf(q) else (mu @ _abspow(H, q)) ** (1 / q)
    den = np.max(np.abs(F), axis=0) if math.isinf(p) else (mu @ _abspow(F, p)) ** (1 / p)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, 0.0)


def structured_starts(op, mean_zero, dec: CyclicDecomposition | None = None):
    """Spikes at every state, class indicators, and the constant."""
    cols = [np.eye(op.n)]
    if dec is not None and dec.d > 1:
        cols.append(np.stack([dec.indicator(j) for j in range(dec.d)], axis=1))
    if not mean_zero:
        cols.append(np.ones((op.n, 1)))
    F = np.concatenate(cols, axis=1)
    if mean_zero:
        F = F - op.mu @ F
    return F


def _boyd(op, p, q, mean_zero, F, iters, tol):
    """Alternating maximization of ``<Pf, g>`` over the unit balls of
    ``L^p`` (f) and ``L^{q'}`` (g). Each half-step solves its block exactly,
    so the value never decreases."""
    S, mu = op.S, op.mu
    Sd = op.dual().S
    F = np.array(F, dtype=float)
    if mean_zero:
        F = F - mu @ F
    keep = np.max(np.abs(F), axis=0) > 1e-14
    F = F[:, keep]
    vals = _ratios(S, F, mu, p, q)
    for _ in range(iters):
        H = S @ F
        # the maximizer of <h, g> over ||g||_{q'} <= 1
        qp = math.inf if q == 1 else q / (q - 1.0)
        G = _dual_map(H, mu, qp)
        U = Sd @ G
        if mean_zero:
            U = U - _centering(U, mu, p)
        F_new = _dual_map(U, mu, p)
        if mean_zero:
            F_new = F_new - mu @ F_new  # removes rounding drift only
        new = _ratios(S, F_new, mu, p, q)
        better = new >= vals
        F = np.where(better[None, :], F_new, F)
        delta = np.max(np.where(better, new - vals, 0.0)) if len(new) else 0.0
        vals = np.maximum(vals, new)
        if delta <= tol * max(1.0, float(vals.max(initial=0.0))):
            break
    return F, vals


def _exact_p1(op, q, mean_zero):
    """``p = 1``: extreme points of the unit ball are ``delta_j / mu_j``
    (or half-differences of two of them on the mean-zero subspace)."""
    K = op.S / op.mu[None, :]
    if not mean_zero:
        cols = K
        W = np.eye(op.n) / op.mu[None, :]
    else:
        i, j = np.triu_indices(op.n, 1)
        cols = 0.5 * (K[:, i] - K[:, j])
        W = np.zeros((op.n, len(i)))
        W[i, np.arange(len(i))] = 0.5 / op.mu[i]
        W[j, np.arange(len(i))] = -0.5 / op.mu[j]
        if len(i) == 0:
            return NormEstimate(0.0, np.zeros(op.n), "exact_extreme_points", True, 1.0, q, True)
    vals = np.max(np.abs(cols), axis=0) if math.isinf(q) else (op.mu @ np.abs(cols) ** q) ** (1 / q)
    k = int(np.argmax(vals))
    return NormEstimate(float(vals[k]), W[:, k], "exact_extreme_points", True, 1.0, q, mean_zero)


def _exact_qinf(op, p, mean_zero):
    """``q = inf``: ``sup_i sup_f |<k_i, f>_mu|`` with ``k_i = S_i. / mu``,
    i.e. the largest dual norm of a row kernel (modulo constants on the
    mean-zero subspace)."""
    K = (op.S / op.mu[None, :]).T  # columns are k_i
    pp = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1.0))
    if mean_zero:
        c = _centering(K, op.mu, p)
        K = K - c
    vals = np.max(np.abs(K), axis=0) if math.isinf(pp) else (op.mu @ np.abs(K) ** pp) ** (1 / pp)
    i = int(np.argmax(vals))
    if math.isinf(pp):
        w = np.zeros(op.n)
        j = int(np.argmax(np.abs(K[:, i])))
        w[j] = np.sign(K[j, i]) / op.mu[j]
    else:
        w = _dual_map(K[:, [i]], op.mu, p)[:, 0]
    return NormEstimate(float(vals[i]), w, "exact_row_dual", True, p, math.inf, mean_zero)


def opnorm(op: FiniteBiStochasticOperator, p, q, mean_zero: bool = False, restarts: int = 64,
           seed: int = 0, iters: int = 2000, tol: float = 1e-15, agree_tol: float = 1e-8,
           dec: CyclicDecomposition | None = None) -> NormEstimate:
    """``sup ||Pf||_q / ||f||_p`` (optionally over mean-zero ``f``).

    Exact methods: ``p = q = 2`` (power iteration on ``P*P``), ``p = 1``
    (extreme points) and ``q = inf`` (row kernels in the dual norm). Other
    pairs use the alternating dual-map iteration from ``restarts`` random
    starts plus spikes, class indicators and the constant; the result is a
    lower bound that is usually the maximum.
    """
    p = check_exponent(p, "p", 1.0, math.inf)
    q = check_exponent(q, "q", 1.0, math.inf)
    if mean_zero and op.n == 1:
        return NormEstimate(0.0, np.zeros(1), "trivial", True, p, q, True)
    if p == 2 and q == 2:
        return _l2_norm(op, mean_zero)
    if p == 1:
        return _exact_p1(op, q, mean_zero)
    if math.isinf(q):
        return _exact_qinf(op, p, mean_zero)
    if dec is None:
        try:
            dec = period_and_classes(op) if op.report().ergodic else None
        except NotErgodicError:
            dec = None
    rng = np.random.default_rng(seed)
    F0 = np.concatenate([structured_starts(op, mean_zero, dec),
                         rng.standard_normal((op.n, restarts))], axis=1)
    F, vals = _boyd(op, p, q, mean_zero, F0, iters, tol)
    k = int(np.argmax(vals))
    best = float(vals[k])
    agree = int(np.sum(vals >= best - agree_tol))
    close = vals[vals >= best - agree_tol]
    spread = float(best - close.min()) if len(close) else 0.0
    w = F[:, k]
    return NormEstimate(best, w / weighted_norm(w, op.mu, p), "boyd_multistart", False, p, q,
                        mean_zero, F.shape[1], agree, spread, agree_tol)


def brute_force_norm(op: FiniteBiStochasticOperator, p, q, mean_zero: bool = False,
                     resolution: int = 2000) -> float:
    """Grid search over directions for ``n <= 3`` (independent oracle)."""
    from scipy.optimize import minimize

    n = op.n
    if n > 3:
        raise ValueError("brute force is limited to n <= 3")

    def ratio(f):
        f = np.asarray(f, dtype=float)
        den = weighted_norm(f, op.mu, p)
        return 0.0 if den == 0 else weighted_norm(op.S @ f, op.mu, q) / den

    if mean_zero:
        # orthonormal basis of the mean-zero subspace (Euclidean), then
        # parametrize by angle / single direction
        basis = np.linalg.svd(op.mu[None, :])[2][1:]
        if len(basis) == 1:
            return ratio(basis[0])
        t = np.linspace(0, np.pi, resolution, endpoint=False)
        vals = [ratio(np.cos(a) * basis[0] + np.sin(a) * basis[1]) for a in t]
        a0 = t[int(np.argmax(vals))]
        res = minimize(lambda a: -ratio(np.cos(a[0]) * basis[0] + np.sin(a[0]) * basis[1]), [a0],
                       method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
        return max(max(vals), -float(res.fun))
    if n == 1:
        return ratio([1.0])
    if n == 2:
        t = np.linspace(0, np.pi, resolution, endpoint=False)
        vals = [ratio([np.cos(a), np.sin(a)]) for a in t]
        a0 = t[int(np.argmax(vals))]
        res = minimize(lambda a: -ratio([np.cos(a[0]), np.sin(a[0])]), [a0], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15})
        return max(max(vals), -float(res.fun))
    m = int(math.sqrt(resolution * 50))
    th = np.linspace(0, np.pi, m)
    ph = np.linspace(0, 2 * np.pi, 2 * m, endpoint=False)
    best, arg = -1.0, None
    for a in th:
        for b in ph:
            v = ratio([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)])
            if v > best:
                best, arg = v, (a, b)
    res = minimize(lambda x: -ratio([np.sin(x[0]) * np.cos(x[1]), np.sin(x[0]) * np.sin(x[1]),
                                     np.cos(x[0])]), list(arg), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15})
    return max(best, -float(res.fun))


# ---------------------------------------------------------------------------
# Aperiodicity certificate
# ---------------------------------------------------------------------------

THRESHOLD_L4 = 2.0 ** 0.25
THRESHOLD_L3 = 2.0 ** (1.0 / 6.0)


@dataclass(frozen=True)
class Certificate:
    certified_aperiodic: bool
    norm_l2_l4: NormEstimate
    norm_l2_l3: NormEstimate
    graph_period: int
    reason: str

    def as_dict(self):
        return {"certified_aperiodic": self.certified_aperiodic, "graph_period": self.graph_period,
                "reason": self.reason, "threshold_l4": THRESHOLD_L4, "threshold_l3": THRESHOLD_L3,
                "norm_l2_l4": self.norm_l2_l4.as_dict(), "norm_l2_l3": self.norm_l2_l3.as_dict()}


def aperiodicity_certificate(op: FiniteBiStochasticOperator, restarts: int = 64, seed: int = 0,
                             margin: float = 1e-9) -> Certificate:
    """Certify period 1 when ``||P||_{2->4} < 2^{1/4}`` or
    ``||P||_{2->3} < 2^{1/6}``.

    A norm estimate only counts when at least two restarts agree within
    ``1e-8`` and it sits below the threshold by more than ``margin`` plus the
    restart spread. The verdict is cross-checked against the graph period;
    a certificate for a periodic graph raises :class:`InvariantBreach`.
    """
    dec = period_and_classes(op)
    n4 = opnorm(op, 2, 4, restarts=restarts, seed=seed, dec=dec)
    n3 = opnorm(op, 2, 3, restarts=restarts, seed=seed, dec=dec)
    fired = []
    for est, thr, name in ((n4, THRESHOLD_L4, "L2->L4"), (n3, THRESHOLD_L3, "L2->L3")):
        if est.converged and est.value < thr - margin - est.spread:
            fired.append(f"||P||_{name} = {est.value:.12g} < {thr:.12g}")
    cert = bool(fired)
    if cert and dec.d >= 2:
        raise InvariantBreach(f"aperiodicity certified but the support graph has period {dec.d}")
    if cert:
        reason = "; ".join(fired)
    elif dec.d >= 2:
        reason = f"no certificate; graph period {dec.d}"
    else:
        reason = "no certificate; norms not below the thresholds"
    return Certificate(cert, n4, n3, dec.d, reason)


# ---------------------------------------------------------------------------
# Rates, peripheral spectrum, limits
# ---------------------------------------------------------------------------


def spectral_radius(A: np.ndarray, squarings: int = 40) -> float:
    """Gelfand's formula ``lim ||A^(2^k)||^(2^-k)`` by repeated squaring
    with renormalization."""
    B = np.array(A, dtype=float)
    logscale = 0.0
    est = np.linalg.norm(B, 2)
    if est == 0:
        return 0.0
    for k in range(squarings):
        nrm = np.linalg.norm(B, 2)
        if nrm == 0 or not np.isfinite(nrm):
            return 0.0
        B = B / nrm
        logscale += math.log(nrm) / 2 ** k
        B = B @ B
        nb = np.linalg.norm(B, 2)
        if nb == 0:
            return 0.0
        est_new = math.exp(logscale + math.log(nb) / 2 ** (k + 1))
        if k > 4 and abs(est_new - est) <= 1e-15 * max(est_new, 1e-300):
            return est_new
        est = est_new
    return est


def induced_norm(M: np.ndarray, mu: np.ndarray, r) -> float:
    """``L^r(mu)`` operator norm of a matrix for ``r`` in {1, 2, inf}."""
    if r == 1:
        return float(np.max((mu @ np.abs(M)) / mu))
    if r == 2:
        s = np.sqrt(mu)
        return float(np.linalg.norm((s[:, None] * M) / s[None, :], 2))
    if math.isinf(r):
        return float(np.max(np.abs(M).sum(axis=1)))
    raise ValueError("induced_norm supports r in {1, 2, inf}")


@dataclass(frozen=True)
class RateFit:
    r: float
    C: float
    rho: float
    intercept: float
    residual: float
    norms: tuple
    fit_range: tuple
    rho_gap: float
    rho_spectral: float

    def as_dict(self):
        return dict(self.__dict__) | {"norms": list(self.norms), "fit_range": list(self.fit_range)}


def convergence_rate(op: FiniteBiStochasticOperator, dec: CyclicDecomposition | None = None,
                     n_max: int = 60, r=2, floor: float = 1e-11) -> RateFit:
    """Fit ``||P^{nd} - E_d||_r ~ C rho^n`` for ``n = 1..n_max``.

    ``rho`` comes from a least-squares line through ``log ||.||`` over the
    second half of the indices whose norms exceed ``floor``; ``C`` is the
    smallest constant with ``||P^{nd} - E_d|| <= C rho^n`` on every computed
    ``n`` (an envelope), and ``intercept`` the fitted ``exp`` intercept.
    ``rho_gap`` is the norm of ``P^d`` on ``{E_d f = 0}`` in ``L^2`` and
    ``rho_spectral`` the spectral radius of ``P^d - E_d``.
    """
    dec = dec or period_and_classes(op)
    E = projection_matrix(op, dec)
    Pd = op.power(dec.d)
    norms = []
    Q = np.eye(op.n)
    for _ in range(n_max):
        Q = Q @ Pd
        norms.append(induced_norm(Q - E, op.mu, r))
    norms = np.array(norms)
    n = np.arange(1, n_max + 1)
    A, s = _sqrt_weighted(op)
    W = (s[:, None] * (Pd @ (np.eye(op.n) - E))) / s[None, :]
    rho_gap = float(np.linalg.norm(W, 2))
    rho_spec = spectral_radius(Pd - E)
    valid = np.flatnonzero(norms > floor)
    if len(valid) < 2:
        rho = 0.0 if len(valid) == 0 else float(norms[valid[0]])
        C = float(norms.max(initial=0.0)) / rho if rho > 0 else 0.0
        return RateFit(r, C, rho, C, 0.0, tuple(norms.tolist()), (1, n_max), rho_gap, rho_spec)
    # contiguous run from the start (later values may sit at rounding level)
    stop = valid[-1] if np.all(np.diff(valid) == 1) else valid[np.argmax(np.diff(valid) > 1)]
    idx = np.arange(valid[0], stop + 1)
    half = idx[len(idx) // 2:] if len(idx) >= 4 else idx
    slope, icpt = np.polyfit(n[half], np.log(norms[half]), 1)
    rho = float(math.exp(slope))
    resid = float(np.sqrt(np.mean((np.log(norms[half]) - (slope * n[half] + icpt)) ** 2)))
    C = float(np.max(norms[idx] / rho ** n[idx]))
    return RateFit(r, C, rho, float(math.exp(icpt)), resid, tuple(norms.tolist()),
                   (int(n[half[0]]), int(n[half[-1]])), rho_gap, rho_spec)


@dataclass(frozen=True)
class EigenReport:
    d: int
    residuals: tuple
    passed: bool
    rho_rest: float
    peripheral: tuple

    def as_dict(self):
        return {"d": self.d, "residuals": list(self.residuals), "passed": self.passed,
                "rho_rest": self.rho_rest, "peripheral": [[z.real, z.imag] for z in self.peripheral]}


def unimodular_eigencheck(op: FiniteBiStochasticOperator, dec: CyclicDecomposition | None = None,
                          tol: float | None = None) -> EigenReport:
    """Verify that the unimodular eigenvalues are exactly the ``d``-th roots.

    For each root ``lambda`` the function ``sum_j conj(lambda)^j 1_{A_j}``
    must satisfy ``P f = lambda f`` (failure raises
    :class:`InvariantBreach`). No other unimodular eigenvalue exists when
    the spectral radius of ``P (I - E_d)`` is below 1.
    """
    dec = dec or period_and_classes(op)
    tol = op.tol * 10 if tol is None else tol
    res = []
    for k in range(dec.d):
        lam = np.exp(2j * np.pi * k / dec.d)
        f = sum(np.conj(lam) ** j * dec.indicator(j) for j in range(dec.d))
        err = float(np.max(np.abs(op.apply(f) - lam * f)))
        res.append(err)
        if err > tol:
            raise InvariantBreach(f"P f = lambda f fails for lambda = exp(2 pi i {k}/{dec.d}): {err:.3e}")
    E = projection_matrix(op, dec)
    rho_rest = spectral_radius(op.S @ (np.eye(op.n) - E))
    ev = np.linalg.eigvals(op.S)
    peri = tuple(sorted((complex(z) for z in ev if abs(abs(z) - 1) < 1e-8),
                        key=lambda z: (round(np.angle(z) % (2 * np.pi), 9))))
    roots_ok = all(min(abs(z - np.exp(2j * np.pi * k / dec.d)) for k in range(dec.d)) < 1e-6 for z in peri)
    passed = rho_rest < 1 - 1e-9 and roots_ok and len(peri) == dec.d
    return EigenReport(dec.d, tuple(res), bool(passed), float(rho_rest), peri)


@dataclass(frozen=True)
class LimitResiduals:
    n: int
    j: int
    primal: dict
    dual: dict

    def as_dict(self):
        return {"n": self.n, "j": self.j, "primal": {str(k): v for k, v in self.primal.items()},
                "dual": {str(k): v for k, v in self.dual.items()}}


def limit_residuals(op: FiniteBiStochasticOperator, dec: CyclicDecomposition | None, f, n: int,
                    j: int) -> LimitResiduals:
    """Distances of ``P^{nd+j} f`` and ``P*^{nd+j} f`` from their limits.

    The limits are ``sum_l (mu(A_l)^-1 int_{A_l} f) 1_{A_{l+j}}`` and the same
    with ``A_{l-j}`` for the dual operator. Norms in ``L^1`` and ``L^2``.
    """
    dec = dec or period_and_classes(op)
    f = np.asarray(f, dtype=float)
    k = n * dec.d + j
    out = {}
    for name, O, sgn in (("primal", op, 1), ("dual", op.dual(), -1)):
        v = np.linalg.matrix_power(O.S, k) @ f
        lim = shift_matrix(dec, sgn * j, op.mu) @ f
        out[name] = {1: weighted_norm(v - lim, op.mu, 1), 2: weighted_norm(v - lim, op.mu, 2)}
    return LimitResiduals(n, j, out["primal"], out["dual"])


# ---------------------------------------------------------------------------
# Deterministic sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicStructure:
    """Bitmask families (bit ``i`` set means state ``i`` belongs to the set)."""

    n: int
    sigma_D: tuple
    sigma_I: dict
    sigma_U: tuple
    class_algebra: tuple
    matches_class_algebra: bool
    invariant_matches_gcd: dict
    convergence: dict
    d: int

    def as_dict(self):
        return {"n": self.n, "d": self.d, "sigma_D": list(self.sigma_D),
                "sigma_I": {str(k): list(v) for k, v in self.sigma_I.items()},
                "sigma_U": list(self.sigma_U), "class_algebra": list(self.class_algebra),
                "matches_class_algebra": self.matches_class_algebra,
                "invariant_matches_gcd": {str(k): v for k, v in self.invariant_matches_gcd.items()},
                "convergence": {str(k): v for k, v in self.convergence.items()}}


def _subset_matrix(n):
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[None, :] >> np.arange(n)[:, None]) & 1).astype(float), masks


def _deterministic_masks(S, tol):
    n = S.shape[0]
    ind, masks = _subset_matrix(n)
    img = S @ ind  # (P 1_B) for every B
    is_ind = np.all((np.abs(img) <= tol) | (np.abs(img - 1) <= tol), axis=0)
    nxt = ((img > 0.5).astype(np.int64) << np.arange(n)[:, None]).sum(axis=0)
    state = np.zeros(1 << n, dtype=np.int8)  # 0 unknown, 1 good, 2 bad, 3 on stack
    state[~is_ind] = 2
    for start in range(1 << n):
        if state[start]:
            continue
        path = []
        b = start
        while state[b] == 0:
            state[b] = 3
            path.append(b)
            b = int(nxt[b])
        verdict = 2 if state[b] == 2 else 1  # a cycle of indicators or a good node
        for v in path:
            state[v] = verdict
    return tuple(int(m) for m in masks[state == 1])


def _invariant_masks(Pk, tol):
    n = Pk.shape[0]
    ind, masks = _subset_matrix(n)
    ok = np.all(np.abs(Pk @ ind - ind) <= tol, axis=0)
    return tuple(int(m) for m in masks[ok])


def _unions_of(groups, n):
    out = set()
    for pick in range(1 << len(groups)):
        m = 0
        for g, grp in enumerate(groups):
            if pick >> g & 1:
                for i in grp:
                    m |= 1 << int(i)
        out.add(m)
    return tuple(sorted(out))


def power_converges(S: np.ndarray, k: int, squarings: int = 50, tol: float = 1e-8) -> bool:
    """Cauchy test for ``(S^{nk})_n``: with ``R = S^{k 2^m}`` for large
    ``m``, convergence holds iff ``R S^k = R`` up to ``tol``."""
    Q = np.linalg.matrix_power(S, k)
    R = Q.copy()
    for _ in range(squarings):
        R = R @ R
        R /= R.sum(axis=1, keepdims=True)
    return bool(np.max(np.abs(R @ Q - R)) <= tol)


def deterministic_sets(op: FiniteBiStochasticOperator, n_limit: int = 16, k_max: int = 12,
                       tol: float = 1e-9) -> DeterministicStructure:
    """Brute force over all ``2^n`` subsets.

    ``A`` is deterministic when ``P^m 1_A`` stays an indicator for every
    ``m``; iterating ``B -> {i : sum_{j in B} S_ij = 1}`` either cycles
    through indicators (deterministic) or produces a non-indicator. Also
    returns the ``P^k``-invariant sets for ``k <= max(d, 1)`` plus ``k``
    up to ``k_max``, the sets deterministic for both ``P`` and ``P*``, and
    the Cauchy test of ``P^{nk}`` for ``k <= k_max``.
    """
    if op.n > n_limit:
        raise ValueError(f"n={op.n} exceeds the brute-force limit {n_limit}")
    ergodic = op.report().ergodic
    dec = period_and_classes(op) if ergodic else None
    d = dec.d if dec else 1
    sD = _deterministic_masks(op.S, tol)
    sDd = _deterministic_masks(op.dual().S, tol)
    sU = tuple(sorted(set(sD) & set(sDd)))
    sI = {}
    gcd_ok = {}
    for k in range(1, max(d, k_max) + 1):
        inv = _invariant_masks(np.linalg.matrix_power(op.S, k), tol)
        sI[k] = inv
        if dec is not None:
            g = math.gcd(k, d)
            groups = [np.concatenate([dec.members(j) for j in range(r, d, g)]) for r in range(g)]
            gcd_ok[k] = inv == _unions_of(groups, op.n)
    if dec is not None:
        algebra = _unions_of([dec.members(j) for j in range(d)], op.n)
    else:
        algebra = ()
    conv = {k: power_converges(op.S, k) for k in range(1, k_max + 1)}
    return DeterministicStructure(op.n, sD, sI, sU, algebra, bool(dec is not None and sD == algebra),
                                  gcd_ok, conv, d)


def is_algebra(masks, n) -> bool:
    """Closed under complement and union (finite algebra of subsets)."""
    s = set(masks)
    full = (1 << n) - 1
    if 0 not in s or full not in s:
        return False
    return all((full ^ a) in s for a in s) and all((a | b) in s for a in s for b in s)
