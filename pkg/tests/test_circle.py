import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypermarkov import circle as Ci
from hypermarkov import criteria as C
from hypermarkov import measures as M


def random_poly(seed, degree=20, real=True):
    rng = np.random.default_rng(seed)
    half = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    if real:
        half[0] = half[0].real
        c = np.concatenate([np.conj(half[:0:-1]), half])
    else:
        c = np.concatenate([rng.standard_normal(degree) + 0j, half])
    return Ci.GridFunction(c, 256)


# ---------------------------------------------------------------------------
# GridFunction
# ---------------------------------------------------------------------------


@given(st.integers(0, 10_000), st.booleans())
def test_sample_coefficient_round_trip(seed, real):
    f = random_poly(seed, real=real)
    g = Ci.GridFunction.from_samples(f.samples, f.degree)
    assert np.max(np.abs(g.coeffs - f.coeffs)) < 1e-12
    h = Ci.GridFunction.from_samples(np.asarray(g.samples))
    assert np.max(np.abs(h.samples - f.samples)) < 1e-12


def test_real_functions_are_hermitian():
    x = np.arange(63) / 63
    f = Ci.GridFunction.from_samples(np.cos(2 * np.pi * 3 * x) + 0.5)
    assert f.is_real() and np.isrealobj(f.samples)
    assert f.coefficient(3) == pytest.approx(0.5) and f.coefficient(-3) == pytest.approx(0.5)


def test_evaluate_agrees_with_grid():
    f = random_poly(3)
    assert np.allclose(f.evaluate(f.grid), f.samples, atol=1e-11)


def test_degree_must_fit_the_grid():
    with pytest.raises(ValueError):
        Ci.GridFunction(np.ones(9), 8)


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------


def test_lebesgue_multiplier_is_the_mean():
    f = random_poly(1)
    g = Ci.apply_multiplier(M.Lebesgue(), f)
    assert np.allclose(g.samples, f.coefficient(0).real, atol=1e-13)
    assert g.degree == f.degree


def test_dirac_multiplier_translates():
    x0 = 0.3
    f = random_poly(2)
    g = Ci.apply_multiplier(M.Dirac(x0), f)
    assert np.allclose(g.samples, f.evaluate(f.grid - x0), atol=1e-11)


def test_riesz_multiplier_on_dirichlet_kernel(riesz_log):
    N = 300
    g = Ci.apply_multiplier(riesz_log, Ci.dirichlet(N))
    x = np.linspace(0, 1, 37, endpoint=False)
    direct = sum(riesz_log.coefficient(n) * np.exp(2j * np.pi * n * x) for n in range(-N, N + 1))
    assert np.allclose(g.evaluate(x), direct.real, atol=1e-12)


def test_power_multiplier_equals_iterated_application():
    c = M.Cantor()
    f = random_poly(4)
    once = Ci.apply_multiplier(M.Power(c, 3), f)
    thrice = f
    for _ in range(3):
        thrice = Ci.apply_multiplier(c, thrice)
    # identical products up to the order of floating-point multiplication
    assert np.max(np.abs(once.coeffs - thrice.coeffs)) <= 4 * np.finfo(float).eps * np.max(np.abs(f.coeffs))


@pytest.mark.parametrize("spec", [
    {"kind": "cantor"},
    {"kind": "dirac", "x0": 0.17},
    {"kind": "convex_ac", "sequence": {"rule": "inv_log", "shift": 2}},
    {"kind": "riesz", "frequencies": {"rule": "geometric", "ratio": 4},
     "coefficients": {"rule": "inv_log", "shift": 2}},
])
@pytest.mark.parametrize("p", [1, 2, math.inf])
def test_markov_contraction(spec, p):
    m = M.measure_from_spec(spec)
    for seed in range(5):
        f = random_poly(seed, degree=30)
        M_fine = 4096
        # the exact sup norm is approached on a fine grid; allow its sampling gap
        # grid quadrature is exact only for p = 2; sup norms are grid maxima
        slack = {1: 1e-4, 2: 1e-12}.get(p, 1e-2) * f.norm(p, M_fine)
        assert Ci.apply_multiplier(m, f).norm(p, M_fine) <= f.norm(p, M_fine) + slack


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("N", [1, 10, 100])
def test_dirichlet_l2_norm(N):
    assert Ci.dirichlet_norm(N, 2) ** 2 == pytest.approx(2 * N + 1, rel=1e-15)
    assert Ci.dirichlet(N).norm(2) ** 2 == pytest.approx(2 * N + 1, rel=1e-15)
    # the fourth moment counts solutions of k1 + k2 = k3 + k4 in [-N, N]
    fourth = sum((2 * N + 1 - abs(s)) ** 2 for s in range(-2 * N, 2 * N + 1))
    assert Ci.dirichlet_norm(N, 4) ** 4 == pytest.approx(fourth, rel=1e-10)


def test_dirichlet_p_norm_growth_rate():
    ratios = [Ci.dirichlet_norm(N, 1.5) ** 1.5 / N ** 0.5 for N in (10, 30, 100, 300, 1000)]
    assert max(ratios) / min(ratios) < 1.2


def test_dirichlet_l1_norm_is_logarithmic():
    Ns = (100, 1000, 10_000)
    # the Lebesgue constants are 4/pi^2 log N + O(1)
    offsets = [Ci.dirichlet_norm(N, 1) - 4 / math.pi ** 2 * math.log(N) for N in Ns]
    assert max(offsets) - min(offsets) < 0.01
    ratios = [Ci.dirichlet_norm(N, 1) / math.log(N) for N in Ns]
    assert ratios[0] > ratios[1] > ratios[2] > 4 / math.pi ** 2


def test_kernel_norms_reports_quadrature_error():
    k = Ci.kernel_norms(50, 1.5)
    assert k.grid >= 64 * 50 and 0 < k.error < 1e-4 * k.value
    with pytest.raises(ValueError):
        Ci.kernel_norms(50, math.inf)


def test_fejer_kernel_is_nonnegative_and_matches_closed_form():
    N = 12
    K = Ci.fejer(N, 512)
    x = K.grid[1:]
    closed = np.sin(np.pi * (N + 1) * x) ** 2 / ((N + 1) * np.sin(np.pi * x) ** 2)
    assert np.allclose(K.samples[1:], closed, atol=1e-12)
    assert K.samples.min() >= -1e-12 and K.samples[0] == pytest.approx(N + 1)


# ---------------------------------------------------------------------------
# Convex construction
# ---------------------------------------------------------------------------


def recovered_ratio(con, n):
    """``2 c_n`` of the normalized density, recovered by FFT of its samples."""
    f = Ci.GridFunction.from_samples(con.normalized.samples, con.density.degree)
    return np.array([2 * f.coefficient(k).real for k in n])


def truncated_oracle(seq, n, T):
    """The sequence minus its secant line through ``T+1`` and ``T+2``."""
    a1, a2 = seq(np.array([T + 1, T + 2]))
    return seq(n) - (a1 + (np.asarray(n) - (T + 1)) * (a2 - a1))


def test_convex_log_construction():
    seq = M.ConvexSeq(M.SequenceRule("inv_log", shift=2))
    T = 4096
    con = Ci.build_nonneg_from_convex(seq, T)
    assert con.grid_min >= -1e-9
    n = np.arange(1, T + 1)
    assert np.allclose(recovered_ratio(con, n), truncated_oracle(seq, n, T) / con.mass,
                       rtol=0, atol=1e-6)
    assert con.normalized.coefficient(0) == pytest.approx(1.0)


@pytest.mark.xfail(strict=True, reason="a_n = 1/log(n+2) decays too slowly: any nonnegative "
                   "truncation at a feasible degree misses a_n by about a_T")
def test_convex_log_coefficients_match_the_untruncated_sequence():
    seq = M.ConvexSeq(M.SequenceRule("inv_log", shift=2))
    con = Ci.build_nonneg_from_convex(seq, 4096)
    n = np.arange(1, 200)
    assert np.allclose(recovered_ratio(con, n), seq(n) / con.mass, rtol=0, atol=1e-6)


def test_truncation_deviation_shrinks_with_degree():
    seq = M.ConvexSeq(M.SequenceRule("inv_log", shift=2))
    devs = [Ci.build_nonneg_from_convex(seq, T).tail_deviation for T in (256, 2048, 16384)]
    assert devs[0] > devs[1] > devs[2] > 0


@given(st.floats(0.05, 0.95), st.integers(1, 60))
def test_fejer_truncation_is_nonnegative_and_exact_below_T(r, T):
    seq = M.ConvexSeq(M.SequenceRule("geometric", ratio=r))
    b = Ci.fejer_truncation(seq.extended(T + 2), T)
    n = np.arange(T + 1)
    assert np.allclose(b, truncated_oracle(seq, n, T), atol=1e-13)
    assert Ci.build_nonneg_from_convex(seq, T).grid_min >= -1e-12


def test_geometric_construction_is_the_poisson_kernel():
    r = 0.5
    seq = M.ConvexSeq(M.SequenceRule("geometric", ratio=r))
    con = Ci.build_nonneg_from_convex(seq, 80)
    x = con.density.grid
    poisson = 0.5 * (1 - r * r) / (1 - 2 * r * np.cos(2 * np.pi * x) + r * r)
    assert np.allclose(con.density.samples, poisson, atol=1e-12)
    assert con.grid_min > 0
    n = np.arange(1, 40)
    assert np.allclose(recovered_ratio(con, n), seq(n) / con.mass, rtol=0, atol=1e-12)


def test_half_power_construction_decay():
    seq = M.ConvexSeq(M.SequenceRule("power", shift=1, exponent=-0.5))
    T = 1 << 20
    con = Ci.build_nonneg_from_convex(seq, T)
    assert con.grid_min >= -1e-9
    n = np.array([16, 64, 256])
    c = recovered_ratio(con, n)
    slope = np.polyfit(np.log(n), np.log(c), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.02)


def test_shifted_start_uses_a_positive_constant():
    seq = M.ConvexSeq(M.SequenceRule("inv_log", shift=2), start=5)
    con = Ci.build_nonneg_from_convex(seq, 2048)
    assert con.constant > 0 and con.grid_min >= -1e-9
    assert con.normalized.coefficient(3) == 0
    assert con.normalized.coefficient(0) == pytest.approx(1.0)


def test_convexity_violation_rejected():
    from hypermarkov.exceptions import SpecError
    with pytest.raises(SpecError):
        Ci.build_nonneg_from_convex(
            M.ConvexSeq(M.SequenceRule("values", values=(1.0, 0.1, 0.5, 0.0))), 10)


# ---------------------------------------------------------------------------
# Product pair
# ---------------------------------------------------------------------------


DEGREE = 16_384


@pytest.fixture(scope="module")
def pair():
    return Ci.product_pair_details(DEGREE)


def test_pair_convolution_is_lebesgue(pair):
    a, b = (p.measure for p in pair)
    n = np.arange(-1000, 1001)
    conv = M.Convolution(a, b).coefficients(n)
    assert np.max(np.abs(conv - (n == 0))) < 1e-10


def test_pair_supports_are_disjoint(pair):
    a, b = (p.measure for p in pair)
    n = np.arange(1, 2000)
    assert np.all(a.coefficients(2 * n) == 0)
    assert np.all(b.coefficients(2 * n - 1) == 0)
    assert np.any(a.coefficients(2 * n + 1) != 0) and np.any(b.coefficients(2 * n) != 0)


def test_pair_densities_are_nonnegative_probability_densities(pair):
    for member in pair:
        d = Ci.density_of(member.measure)
        assert d.samples.min() >= -1e-9 and member.check_min >= -1e-9
        assert np.mean(d.samples) == pytest.approx(1.0, abs=1e-10)
        assert member.raw_min < 0 and member.constant == pytest.approx(-1.01 * member.raw_min)


def test_pair_members_are_not_hyperbounded(pair):
    for member in pair:
        c = C.classify(member.measure, 10_000)
        assert c.overall == C.NOT_HYPERBOUNDED and c.witness.startswith("hr")
        assert c.hr[1.5].verdict == "Diverges"


def test_odd_member_constant_grows_with_degree():
    small = Ci.product_pair_details(1024)[0].constant
    assert Ci.product_pair_details(DEGREE)[0].constant > small


# ---------------------------------------------------------------------------
# Uniform ergodicity and norm lower bounds
# ---------------------------------------------------------------------------


def test_uniform_ergodicity_examples(riesz_log):
    d = Ci.uniform_ergodicity_check(M.Dirac(0.0), 100)
    assert d.margin == 0 and not d.uniformly_ergodic
    leb = Ci.uniform_ergodicity_check(M.Lebesgue(), 100)
    assert leb.margin == 1 and leb.uniformly_ergodic
    r = Ci.uniform_ergodicity_check(riesz_log, 10_000)
    assert r.margin >= 0.5 - 1e-12 and "finite" not in r.caveat or r.caveat


def test_lebesgue_norm_lower_bound_is_one():
    lb = Ci.multiplier_norm_lower_bound(M.Lebesgue(), 1.5, 2.0, N=64)
    assert lb.value == pytest.approx(1.0) and lb.witness == "constant"


def test_dirac_norm_lower_bound_grows_like_kernel_ratio():
    p, q = 1.5, 3.0
    values = [Ci.multiplier_norm_lower_bound(M.Dirac(0.3), p, q, N=N).value for N in (8, 32, 128)]
    assert values[0] < values[1] < values[2]
    ratio = Ci.dirichlet_norm(128, q) / Ci.dirichlet_norm(128, p)
    assert values[2] >= ratio * (1 - 1e-3)


def test_convex_half_lower_bound_is_stable(convex_half):
    values = [Ci.multiplier_norm_lower_bound(convex_half, 1.2, 2.0, N=N).value for N in (32, 128, 512)]
    assert values[-1] < 1.5 * values[0] and values[-1] < 10


@pytest.mark.parametrize("spec", [{"kind": "cantor"}, {"kind": "dirac", "x0": 0.4}])
def test_norm_lower_bound_is_monotone_in_N(spec):
    m = M.measure_from_spec(spec)
    values = [Ci.multiplier_norm_lower_bound(m, 1.5, 2.5, N=N).value for N in (4, 16, 64)]
    assert values == sorted(values)


def test_norm_lower_bound_validates_exponents():
    with pytest.raises(ValueError):
        Ci.multiplier_norm_lower_bound(M.Lebesgue(), 2.0, 1.5)
