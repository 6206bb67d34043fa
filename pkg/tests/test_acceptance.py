"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import itertools
import math
import time

import numpy as np
import pytest

from hypermarkov import circle as Ci
from hypermarkov import criteria as C
from hypermarkov import equidistribution as U
from hypermarkov import finite as F
from hypermarkov import measures as M
from hypermarkov.series import CONVERGES, DIVERGES

try:
    from .oracles import cantor_oracle
except ImportError:  # run as a script
    from oracles import cantor_oracle

RESULTS = {}


def report(k, ok, detail):
    line = f"ACCEPTANCE {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    assert ok, line


def inv_log_riesz(ratio):
    return M.RieszSpec(M.SequenceRule("geometric", ratio=ratio), M.SequenceRule("inv_log", shift=2))


# ---------------------------------------------------------------------------


def test_acceptance_01_exact_norms():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 8):
        op = F.example2(n)
        for q in (3, 4):
            worst = max(worst, abs(F.opnorm(op, 2, q).value - 2 ** (0.5 - 1 / q)))
        sup_err = abs(F.opnorm(op, 2, math.inf).value - math.sqrt(2))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and sup_err <= 1e-9 and elapsed < 5
    report(1, ok, f"max |err| (2,q) = {worst:.2e}, (2,inf) err = {sup_err:.2e}, {elapsed:.2f} s")


def test_acceptance_02_threshold_optimality():
    op = F.example2(8)
    cert = F.aperiodicity_certificate(op)
    e4 = abs(cert.norm_l2_l4.value - F.THRESHOLD_L4)
    e3 = abs(cert.norm_l2_l3.value - F.THRESHOLD_L3)
    mix = F.mix([F.rank_one(np.array([0.5, 0.5])), F.swap()], [0.75, 0.25])
    mc = F.aperiodicity_certificate(mix)
    ok = (e4 <= 1e-6 and e3 <= 1e-6 and cert.graph_period == 2 and not cert.certified_aperiodic
          and mc.certified_aperiodic and mc.norm_l2_l4.value < F.THRESHOLD_L4
          and mc.norm_l2_l3.value < F.THRESHOLD_L3)
    report(2, ok, f"threshold operator errors {e4:.1e}/{e3:.1e}, d={cert.graph_period}, certified="
                  f"{cert.certified_aperiodic}; mixture norms {mc.norm_l2_l4.value:.6f}/"
                  f"{mc.norm_l2_l3.value:.6f} certified={mc.certified_aperiodic}")


def test_acceptance_03_certificate_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    contradictions = 0
    count = 1000
    for i in range(count):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(d, 61))
        op = F.random_block_cyclic(d, n, seed=int(rng.integers(2 ** 31)))
        cert = F.aperiodicity_certificate(op)
        if cert.certified_aperiodic or cert.graph_period != d:
            contradictions += 1
    elapsed = time.perf_counter() - t0
    ok = contradictions == 0 and elapsed < 120
    report(3, ok, f"{count} periodic instances, {contradictions} contradictions, {elapsed:.1f} s")


def test_acceptance_04_riesz_exactness():
    worst, checked, bad_bound = 0.0, 0, 0
    for ratio in (4, 7):
        spec = M.RieszSpec([ratio ** k for k in range(1, 6)],
                           [1 / math.log(k + 2) for k in range(1, 6)])
        m = M.Riesz(spec)
        exact = {}
        for eps in itertools.product((-1, 0, 1), repeat=5):
            t = int(np.dot(eps, spec.freqs(5)))
            exact[t] = np.prod([(a / 2) ** abs(e) for a, e in zip(spec.coefs(5), eps)])
        ms = np.arange(-10_000, 10_001)
        c = m.coefficients(ms)
        want = np.array([exact.get(int(t), 0.0) for t in ms])
        worst = max(worst, float(np.max(np.abs(c - want))))
        checked += sum(1 for t in exact if abs(t) <= 10_000)
        bad_bound += int(np.sum(np.abs(c[ms != 0]) > 0.5 + 1e-15))
    verdicts = [C.power_singularity_check(inv_log_riesz(4), k, 100_000).verdict for k in range(1, 11)]
    ok = worst <= 1e-12 and bad_bound == 0 and all(v == DIVERGES for v in verdicts)
    report(4, ok, f"{checked} representable frequencies, max err {worst:.1e}, |c|>1/2: {bad_bound}, "
                  f"powers k<=10 all Diverges: {all(v == DIVERGES for v in verdicts)}")


def test_acceptance_05_cantor():
    c = M.Cantor()
    n = np.arange(-10_000, 10_001)
    err = float(np.max(np.abs(c.coefficients(3 * n) - c.coefficients(n))))
    w = C.wiener_average(c, 100_000)
    first = abs(c.coefficient(1))
    oracle = abs(cantor_oracle(1, 18))
    ok = err <= 1e-12 and w <= 0.01 and abs(first - oracle) <= 1e-3 and abs(first - 0.4663) <= 1e-3
    report(5, ok, f"self-similarity err {err:.1e}, wiener(1e5) = {w:.4g}, |c(1)| = {first:.6f} "
                  f"vs oracle {oracle:.6f}")


def test_acceptance_06_ht_hr_dichotomy():
    m = M.ConvexAC(M.ConvexSeq(M.SequenceRule("inv_log", shift=2)))
    N = 100_000
    ht = C.ht_series(m, N)
    c = 1.0 / (2 * m.mass ** 2)  # two-sided |nu(n)|^2 = c / log^2(n + 2)
    analytic = c / math.log(N)
    ratio = ht.tail_estimate / analytic if ht.tail_estimate else float("nan")
    hr = {p: C.hr_series(m, p, 0.1, N).verdict for p in (1.2, 1.5, 1.9)}
    ok = ht.verdict == CONVERGES and 0.5 <= ratio <= 2 and all(v == DIVERGES for v in hr.values())
    report(6, ok, f"ht {ht.verdict}, tail/analytic = {ratio:.3f}, hr {hr}")


def test_acceptance_07_product_pair():
    degree = 131_072
    a, b = Ci.product_pair_details(degree)
    n = np.arange(-1000, 1001)
    conv = M.Convolution(a.measure, b.measure).coefficients(n)
    err = float(np.max(np.abs(conv - (n == 0))))
    k = np.arange(1, degree + 1)
    sa, sb = a.measure.coefficients(k) != 0, b.measure.coefficients(k) != 0
    disjoint = not np.any(sa & sb) and sa.any() and sb.any()
    mins = [min(x.grid_min, x.check_min) for x in (a, b)]
    cls = [C.classify(x.measure, 100_000).overall for x in (a, b)]
    ok = (err <= 1e-10 and disjoint and min(mins) >= -1e-9
          and all(v == C.NOT_HYPERBOUNDED for v in cls))
    report(7, ok, f"degree {degree}: conv err {err:.1e}, disjoint {disjoint}, grid minima "
                  f"{mins[0]:.3g}/{mins[1]:.3g}, classes {cls}")


def test_acceptance_08_cyclic_limits():
    rng = np.random.default_rng(8)
    worst_ratio, mass_err, eig_ok, count = 0.0, 0.0, True, 40
    for i in range(count):
        d = int(rng.integers(2, 7))
        m = int(rng.integers(2, 6))
        op = F.random_block_cyclic(d, d * m, seed=int(rng.integers(2 ** 31)), uniform_mu=True,
                                   laziness=float(rng.uniform(0.02, 0.08)))
        dec = F.period_and_classes(op)
        fit = F.convergence_rate(op, dec, n_max=60)
        eig_ok &= F.unimodular_eigencheck(op, dec).passed
        mass_err = max(mass_err, float(np.max(np.abs(dec.masses - 1 / dec.d))))
        f = rng.standard_normal(op.n)
        bound = fit.C * fit.rho ** 40 * F.weighted_norm(f, op.mu, 2)
        for j in range(d):
            res = F.limit_residuals(op, dec, f, 40, j)
            worst_ratio = max(worst_ratio, max(res.primal[2], res.dual[2]) / bound)
    ok = worst_ratio <= 1 + 1e-9 and eig_ok and mass_err <= 1e-9
    report(8, ok, f"{count} chains: max residual / (C rho^40 ||f||) = {worst_ratio:.12f}, "
                  f"eigencheck {eig_ok}, mass err {mass_err:.1e}")


def test_acceptance_09_exponential_rate():
    worst, count = 0.0, 100
    rng = np.random.default_rng(9)
    for i in range(count):
        d = int(rng.integers(1, 5))
        op = F.random_reversible_per_class(d, int(rng.integers(4, 16)), seed=int(rng.integers(2 ** 31)))
        fit = F.convergence_rate(op)
        worst = max(worst, abs(fit.rho - fit.rho_gap) / fit.rho_gap)
    ok = worst <= 0.05
    report(9, ok, f"{count} instances: max |rho_fit - rho_gap| / rho_gap = {worst:.2e}")


def test_acceptance_10_deterministic_algebra():
    rng = np.random.default_rng(10)
    algebra_ok = conv_ok = 0
    count = 60
    for i in range(count):
        d = int(rng.integers(1, 6))
        n = int(rng.integers(d, 15))
        op = F.random_block_cyclic(d, n, seed=int(rng.integers(2 ** 31)))
        s = F.deterministic_sets(op, n_limit=14, k_max=12)
        algebra_ok += s.matches_class_algebra and F.is_algebra(s.sigma_D, n)
        conv_ok += all(s.convergence[k] == (k % s.d == 0) for k in range(1, 13))
    ok = algebra_ok == count and conv_ok == count
    report(10, ok, f"{count} chains with n <= 14: class algebra {algebra_ok}/{count}, "
                   f"Cauchy test {conv_ok}/{count}")


def test_acceptance_11_del_criterion():
    arith = U.SequenceSpec("arith")
    leb = U.del_series(M.Lebesgue(), arith, N_max=20_000)
    basel = leb.series.partial_sums[-1]
    dirac = U.del_series(M.Dirac(0.0), arith, N_max=20_000)
    riesz = M.Riesz(inv_log_riesz(4))
    bg = U.del_series(riesz, U.SequenceSpec("bounded_gap", d=3, seed=0), N_max=4000)
    ok = (abs(basel - math.pi ** 2 / 6) <= 1e-3 and leb.verdict == CONVERGES
          and dirac.verdict == DIVERGES and bg.verdict == CONVERGES)
    report(11, ok, f"lebesgue sum {basel:.6f} ({leb.verdict}), dirac {dirac.verdict}, "
                   f"riesz + bounded gaps {bg.verdict}")


def test_acceptance_12_ud_experiment():
    t0 = time.perf_counter()
    arith = U.SequenceSpec("arith")
    riesz = M.Riesz(inv_log_riesz(4))
    rep = U.ud_experiment(riesz, arith, samples=100, N=100_000, seed=7)
    ctrl = U.ud_experiment(M.Dirac(0.0), arith, samples=100, N=100_000, seed=7)
    elapsed = time.perf_counter() - t0
    ok = rep.both_pass >= 95 and ctrl.weyl_pass == 0 and elapsed < 180
    report(12, ok, f"riesz {rep.both_pass}/100 pass (Weyl {rep.weyl_pass}, discrepancy "
                   f"{rep.discrepancy_pass}), dirac passes {ctrl.weyl_pass}/100, {elapsed:.1f} s")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_acceptance_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
