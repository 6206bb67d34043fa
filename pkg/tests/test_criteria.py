import itertools
import math

import numpy as np
import pytest

from hypermarkov import criteria as C
from hypermarkov import measures as M
from hypermarkov.series import CONVERGES, DIVERGES, INCONCLUSIVE

N = 100_000


def atom_mix(w):
    if w == 1:
        return M.Dirac(0.0)
    return M.Mixture([w, 1 - w], [M.Dirac(0.0), M.Lebesgue()])


# ---------------------------------------------------------------------------
# Wiener average
# ---------------------------------------------------------------------------


def test_wiener_average_closed_forms():
    assert C.wiener_average(M.Dirac(0.4), 500) == pytest.approx(1.0)
    assert C.wiener_average(M.Lebesgue(), 500) == pytest.approx(1 / 1001)
    mix = M.Mixture([0.5, 0.5], [M.Dirac(0.0), M.Lebesgue()])
    assert C.wiener_average(mix, 10_000) == pytest.approx(0.25, abs=1e-4)


@pytest.mark.parametrize("w", [0.1, 0.5, 1.0])
def test_wiener_average_sees_atom_mass(w):
    for n in (100, 1000, 10_000):
        assert C.wiener_average(atom_mix(w), n) >= w ** 2 - 1e-12


def test_cantor_wiener_average_small():
    assert C.wiener_average(M.Cantor(), N) <= 0.01


# ---------------------------------------------------------------------------
# Series criteria
# ---------------------------------------------------------------------------


def test_ht_examples(convex_log, riesz_log):
    mix = M.Mixture([0.5, 0.5], [M.Dirac(0.0), M.Lebesgue()])
    assert C.ht_series(mix, N).verdict == DIVERGES
    assert C.ht_series(convex_log, N).verdict == CONVERGES
    assert C.ht_series(riesz_log, N).verdict == CONVERGES


def test_hr_examples(convex_log, convex_half):
    assert C.hr_series(convex_log, 1.5, 0.1, N).verdict == DIVERGES
    assert C.hr_series(convex_half, 1.5, 0.1, N).verdict == CONVERGES
    assert C.hr_series(M.Lebesgue(), 1.5, 0.1, N).verdict == CONVERGES


@pytest.mark.parametrize("p, eps", [(1.0, 0.1), (2.0, 0.1), (1.5, 0.0)])
def test_hr_domain(p, eps):
    with pytest.raises(ValueError):
        C.hr_series(M.Lebesgue(), p, eps, 100)


def test_alpha_examples(convex_half):
    r = C.alpha_summability(convex_half, 3, N)
    assert r.verdict == CONVERGES and r.implied_p == pytest.approx(1.2)
    assert C.alpha_summability(M.Dirac(0.0), 2, N).verdict == DIVERGES
    assert C.alpha_summability(M.Cantor(), 4, N).verdict in (INCONCLUSIVE, DIVERGES)
    assert C.implied_p(1.0) == 1.0


def test_riesz_alpha_uses_product_identity():
    spec = M.RieszSpec([4 ** k for k in range(1, 7)], [0.9, -0.5, 0.7, 0.3, 1.0, 0.6])
    m = M.Riesz(spec)
    s = 1.7
    coeffs = M.riesz_enumerate(spec, 6)
    direct = sum(abs(m.coefficient(k)) ** s for k in coeffs)
    product = np.prod([1 + 2 * abs(a / 2) ** s for a in spec.coefs()])
    assert direct == pytest.approx(product, rel=1e-12)
    assert C.alpha_summability(m, s, 1000).method == "riesz_product_identity"


@pytest.mark.parametrize("rule, k, expected", [
    (M.SequenceRule("inv_log", shift=2), 3, DIVERGES),
    (M.SequenceRule("geometric", ratio=0.5), 1, CONVERGES),
    (M.SequenceRule("power", exponent=-0.25), 1, DIVERGES),
    (M.SequenceRule("power", exponent=-0.25), 3, CONVERGES),
])
def test_power_singularity_examples(rule, k, expected):
    spec = M.RieszSpec(M.SequenceRule("geometric", ratio=4), rule)
    assert C.power_singularity_check(spec, k, N).verdict == expected


def test_harris_power(convex_half, riesz_log):
    assert C.harris_power_check(convex_half, 10, N)[0] == 2
    assert C.harris_power_check(riesz_log, 10, N)[0] is None
    assert C.harris_power_check(M.Lebesgue(), 10, N)[0] == 1


# ---------------------------------------------------------------------------
# Window bounds and Korner condition
# ---------------------------------------------------------------------------


def test_window_bound_dirac_violated():
    rep = C.window_bound_check(M.Dirac(0.0), 1.5, 2.0, norm_cap=3.0, N=10_000)
    assert rep.violated and max(rep.violations) == 10_000


@pytest.mark.parametrize("p, q", [(1.2, 2.0), (1.5, 3.0), (2.0, 4.0), (1.0, 1.5)])
def test_window_bound_lebesgue_never_violated(p, q):
    assert not C.window_bound_check(M.Lebesgue(), p, q, 1.0, N=2000).violated


def test_window_bound_convex_log_violated_at_small_p(convex_log):
    rep = C.window_bound_check(convex_log, 1.2, 2.0, 1.0, N=100_000)
    assert rep.violated


def test_window_bound_rejects_bad_exponents():
    with pytest.raises(ValueError):
        C.window_bound_check(M.Lebesgue(), 2.0, 1.5)


def test_korner_examples(convex_half, riesz_log):
    rep = C.korner_condition(convex_half, 10_000)
    assert rep.constant == pytest.approx(1.5) and rep.argmax == 1
    assert C.korner_condition(convex_half, 1000).constant == pytest.approx(rep.constant)
    assert math.isinf(C.korner_condition(riesz_log, 1000).constant)
    assert C.korner_condition(M.Lebesgue(), 1000).constant == 0.0


def test_korner_brute_force(convex_log):
    Nk = 300
    a = np.abs(convex_log.coefficients(np.arange(0, 2 * Nk + 1))) ** 2
    brute = max(a[n] / (a[n + 1: 2 * n + 1].sum() / n) for n in range(1, Nk + 1))
    assert C.korner_condition(convex_log, Nk).constant == pytest.approx(brute, rel=1e-12)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def test_classify_examples(convex_log, convex_half):
    d = C.classify(M.Dirac(0.7), N)
    assert (d.overall, d.witness, d.has_atoms) == (C.NOT_HYPERBOUNDED, "atom", True)
    c = C.classify(convex_log, N)
    assert c.overall == C.NOT_HYPERBOUNDED and c.witness.startswith("hr")
    assert c.ht_ok
    h = C.classify(convex_half, N)
    assert h.overall == C.HYPERBOUNDED and h.witness.startswith("alpha=3")


def test_classify_riesz_never_claims_not_hyperbounded(riesz_log):
    c = C.classify(riesz_log, N)
    assert c.overall != C.NOT_HYPERBOUNDED
    assert c.hr[1.5].verdict != DIVERGES


def test_classify_is_order_independent(convex_log):
    steps = ["atoms", "ht", "hr", "alpha", "korner", "harris"]
    base = C.classify(convex_log, 20_000).as_dict()
    for order in list(itertools.permutations(steps))[::97]:
        assert C.classify(convex_log, 20_000, order=order).as_dict() == base


def test_atoms_force_not_hyperbounded():
    mix = M.Mixture([0.1, 0.9], [M.Dirac(0.3), M.Lebesgue()])
    c = C.classify(mix, N)
    assert c.has_atoms and c.overall == C.NOT_HYPERBOUNDED
