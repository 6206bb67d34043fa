"""Command-line front end.

Every command writes one JSON report that embeds its resolved configuration
and a SHA-256 of that configuration. Floats are written with 17 significant
digits and no timestamps are recorded, so identical configurations give
byte-identical reports.

Exit codes: 0 success, 2 invalid input, 3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import THREADS_ENV, set_threads
from .exceptions import InvariantBreach, NotErgodicError, OutOfRangeError, SpecError

SCHEMA = "hypermarkov.report/1"
EXIT_OK, EXIT_INPUT, EXIT_BREACH = 0, 2, 3


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if s in ("0", "-0"):
        return "0.0"
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def to_plain(obj):
    """Convert numpy scalars, arrays and complex numbers to JSON-ready data."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return to_plain(obj.as_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with 17-digit floats and ``inf`` as a string."""
    obj = to_plain(obj)

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return _fmt_float(o)
        return json.dumps(o)

    return enc(obj, 0) + "\n"


def config_hash(config: dict) -> str:
    canonical = json.dumps(to_plain(config), sort_keys=True, separators=(",", ":"),
                           allow_nan=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def make_report(command: str, config: dict, result) -> dict:
    return {"schema": SCHEMA, "version": __version__, "command": command,
            "config": config, "config_sha256": config_hash(config), "result": result}


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _write_csv(path, header, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt_float(v).strip('"') if isinstance(v, float) else v for v in r])


# ---------------------------------------------------------------------------
# Input
# ---------------------------------------------------------------------------


def load_json(value: str, what: str):
    """Inline JSON (starting with ``{`` or ``[``) or a path to a JSON file."""
    text = value.strip()
    if text.startswith(("{", "[")):
        src = f"{what} (inline)"
    else:
        src = f"{what} file {value}"
        try:
            text = Path(value).read_text()
        except OSError as exc:
            raise SpecError(f"{src}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{src}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _floats(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str):
    return [int(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# measure commands
# ---------------------------------------------------------------------------


def cmd_measure_analyze(args):
    from .circle import uniform_ergodicity_check
    from .criteria import classify
    from .measures import measure_from_spec

    spec = load_json(args.spec, "measure spec")
    m = measure_from_spec(spec)
    config = {"spec": spec, "N": args.N, "ps": args.ps, "eps": args.eps, "alphas": args.alphas,
              "k_max": args.k_max, "korner_N": args.korner_N}
    cl = classify(m, N=args.N, ps=tuple(args.ps), eps=args.eps, alphas=tuple(args.alphas),
                  k_max=args.k_max, korner_N=args.korner_N)
    ue = uniform_ergodicity_check(m, min(args.N, 10_000))
    result = {"classification": cl.as_dict(), "uniform_ergodicity": ue.as_dict()}
    if args.csv:
        rows = []
        series = [("ht", cl.ht)] + [(f"hr_p{p:g}", v) for p, v in sorted(cl.hr.items())]
        series += [(f"alpha_{a:g}", v.series) for a, v in sorted(cl.alpha.items())]
        for name, s in series:
            rows += [(name, c, float(v)) for c, v in zip(s.checkpoints, s.partial_sums)]
        _write_csv(Path(args.csv) / "partial_sums.csv", ["series", "checkpoint", "partial_sum"], rows)
    return make_report("measure analyze", config, result)


def cmd_measure_coeffs(args):
    from .measures import measure_from_spec

    spec = load_json(args.spec, "measure spec")
    m = measure_from_spec(spec)
    n = np.arange(-args.n_max, args.n_max + 1) if args.two_sided else np.arange(0, args.n_max + 1)
    c = m.coefficients(n)
    config = {"spec": spec, "n_max": args.n_max, "two_sided": args.two_sided}
    result = {"n": n, "re": c.real, "im": c.imag}
    if args.csv:
        _write_csv(args.csv, ["n", "re", "im", "abs"],
                   [(int(k), float(v.real), float(v.imag), float(abs(v))) for k, v in zip(n, c)])
    return make_report("measure coeffs", config, result)


def cmd_measure_norm_lb(args):
    from .circle import multiplier_norm_lower_bound
    from .measures import measure_from_spec

    spec = load_json(args.spec, "measure spec")
    m = measure_from_spec(spec)
    config = {"spec": spec, "p": args.p, "q": args.q, "N": args.N, "seed": args.seed}
    res = multiplier_norm_lower_bound(m, args.p, args.q, N=args.N, seed=args.seed)
    return make_report("measure norm-lb", config, res.as_dict())


def cmd_measure_construct(args):
    from .circle import build_nonneg_from_convex, product_pair_details

    config = {"target": args.target, "degree": args.degree}
    if args.target == "product-pair":
        a, b = product_pair_details(args.degree)
        result = {"members": [a.as_dict(), b.as_dict()],
                  "specs": [a.measure.to_spec(), b.measure.to_spec()]}
        if args.out_dir:
            d = Path(args.out_dir)
            for i, mem in enumerate((a, b), start=1):
                _write(dumps(mem.measure.to_spec()), str(d / f"member{i}.json"))
                t = mem.measure.table
                _write_csv(d / f"member{i}_coefficients.csv", ["n", "coefficient"],
                           [(k, float(np.real(v))) for k, v in enumerate(t)])
        return make_report("measure construct", config, result)
    from .measures import ConvexAC

    if not args.spec:
        raise SpecError("construct convex needs --spec with a convex_ac measure")
    from .measures import measure_from_spec

    spec = load_json(args.spec, "measure spec")
    m = measure_from_spec(spec)
    if not isinstance(m, ConvexAC):
        raise SpecError("measure spec: construct convex needs kind convex_ac")
    config["spec"] = spec
    cons = build_nonneg_from_convex(m.seq, args.degree)
    result = cons.as_dict()
    if args.out_dir:
        g = cons.normalized
        _write_csv(Path(args.out_dir) / "density.csv", ["x", "density"],
                   [(float(x), float(v)) for x, v in zip(g.grid, g.samples.real)])
    return make_report("measure construct", config, result)


# ---------------------------------------------------------------------------
# operator commands
# ---------------------------------------------------------------------------


def _analyze_ergodic(op, args):
    from . import finite as F

    dec = F.period_and_classes(op)
    norms = {}
    for p, q, mz in ((2, 4, False), (2, 3, False), (2, math.inf, False), (2, 2, True)):
        est = F.opnorm(op, p, q, mean_zero=mz, restarts=args.restarts, seed=args.seed, dec=dec)
        key = f"L{p:g}->L{'inf' if math.isinf(q) else format(q, 'g')}" + (" mean-zero" if mz else "")
        norms[key] = est.as_dict()
    cert = F.aperiodicity_certificate(op, restarts=args.restarts, seed=args.seed)
    rates = {f"r{r}": F.convergence_rate(op, dec, args.n_max, r).as_dict() for r in (1, 2)}
    eig = F.unimodular_eigencheck(op, dec)
    out = {"period": dec.d, "classes": dec.as_dict(), "norms": norms,
           "certificate": cert.as_dict(), "rates": rates, "eigencheck": eig.as_dict()}
    if op.n <= args.n_limit:
        out["deterministic"] = F.deterministic_sets(op, args.n_limit).as_dict()
    return out


def cmd_operator_analyze(args):
    from . import finite as F

    spec = load_json(args.spec, "operator spec")
    op = F.operator_from_spec(spec)
    config = {"spec": spec, "restarts": args.restarts, "seed": args.seed, "n_max": args.n_max,
              "n_limit": args.n_limit}
    rep = op.report()
    result = {"validation": rep.as_dict()}
    if rep.ergodic:
        result.update(_analyze_ergodic(op, args))
    else:
        comps = []
        for states in F.communicating_classes(op):
            sub = F.restrict(op, states)
            comps.append({"states": states, "mass": float(op.mu[states].sum()),
                          **_analyze_ergodic(sub, args)})
        result["components"] = comps
    if args.csv:
        rows = []
        for key, r in (result.get("rates") or {}).items():
            rows += [(key, i + 1, v) for i, v in enumerate(r["norms"])]
        _write_csv(args.csv, ["norm", "n", "value"], rows)
    return make_report("operator analyze", config, result)


def cmd_operator_norm(args):
    from . import finite as F

    spec = load_json(args.spec, "operator spec")
    op = F.operator_from_spec(spec)
    config = {"spec": spec, "p": args.p, "q": args.q, "mean_zero": args.mean_zero,
              "restarts": args.restarts, "seed": args.seed}
    est = F.opnorm(op, args.p, args.q, mean_zero=args.mean_zero, restarts=args.restarts,
                   seed=args.seed)
    return make_report("operator norm", config, est.as_dict())


def cmd_operator_limits(args):
    from . import finite as F

    spec = load_json(args.spec, "operator spec")
    op = F.operator_from_spec(spec)
    dec = F.period_and_classes(op)
    f = np.asarray(load_json(args.f, "function") if args.f else np.eye(op.n)[0] / op.mu[0], float)
    if f.shape != (op.n,):
        raise SpecError(f"function: expected {op.n} values, got shape {list(f.shape)}")
    config = {"spec": spec, "n": args.n, "j": args.j, "f": f, "n_max": args.n_max}
    res = F.limit_residuals(op, dec, f, args.n, args.j)
    rate = {f"r{r}": F.convergence_rate(op, dec, max(args.n_max, args.n), r).as_dict() for r in (1, 2)}
    return make_report("operator limits", config, {"residuals": res.as_dict(), "rates": rate})


def cmd_operator_deterministic(args):
    from . import finite as F

    spec = load_json(args.spec, "operator spec")
    op = F.operator_from_spec(spec)
    config = {"spec": spec, "n_limit": args.n_limit, "k_max": args.k_max}
    if op.n > args.n_limit:
        raise SpecError(f"operator spec: n={op.n} exceeds --n-limit {args.n_limit}")
    ds = F.deterministic_sets(op, args.n_limit, args.k_max)
    if ds.d and ds.sigma_D and not F.is_algebra(ds.sigma_D, op.n):
        raise InvariantBreach("deterministic sets do not form an algebra")
    return make_report("operator deterministic", config, ds.as_dict())


# ---------------------------------------------------------------------------
# ud command
# ---------------------------------------------------------------------------


def cmd_ud_test(args):
    from . import equidistribution as U
    from .measures import measure_from_spec

    mspec = load_json(args.measure, "measure spec")
    sspec = load_json(args.seq, "sequence spec")
    m = measure_from_spec(mspec)
    seq = U.SequenceSpec.from_spec(sspec)
    config = {"measure": mspec, "seq": sspec, "N": args.N, "samples": args.samples,
              "seed": args.seed, "m_freqs": args.m_freqs, "weyl_threshold": args.weyl_threshold,
              "discrepancy_threshold": args.discrepancy_threshold, "del_N": args.del_N}
    exp = U.ud_experiment(m, seq, args.samples, args.N, tuple(args.m_freqs), args.seed,
                          args.weyl_threshold, args.discrepancy_threshold)
    dels = {str(mf): U.del_series(m, seq, mf, args.del_N).as_dict() for mf in args.m_freqs}
    n = seq.generate(args.N)
    result = {"experiment": exp.as_dict(), "del": dels, "gap_bound": seq.gap_bound,
              "growth_exponent": U.growth_exponent(n)}
    if args.csv:
        _write_csv(args.csv, ["index", "x", "weyl_max", "discrepancy"],
                   [tuple(r.values()) for r in exp.rows()])
    return make_report("ud test", config, result)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hypermarkov",
        description="Hyperboundedness diagnostics for convolution and finite Markov operators.",
        epilog=f"Environment: {THREADS_ENV} sets the default worker count (default 1).")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--threads", type=int, default=None,
                    help=f"cap worker threads (overrides {THREADS_ENV})")
    top = ap.add_subparsers(dest="group", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("--spec", required=True, help="JSON file or inline JSON")
        p.add_argument("--out", default=None, help="report path (default stdout)")

    meas = top.add_parser("measure", help="spectral measures on the circle")
    ms = meas.add_subparsers(dest="cmd", required=True)
    p = ms.add_parser("analyze", help="classify a measure")
    common(p)
    p.add_argument("--N", type=int, default=100_000, help="number of coefficients")
    p.add_argument("--ps", type=_floats, default=[1.2, 1.5, 1.9], help="comma list of p in (1,2)")
    p.add_argument("--eps", type=float, default=0.1, help="log exponent slack")
    p.add_argument("--alphas", type=_floats, default=[1.0, 2.0, 3.0, 4.0])
    p.add_argument("--k-max", dest="k_max", type=int, default=10)
    p.add_argument("--korner-N", dest="korner_N", type=int, default=None)
    p.add_argument("--csv", default=None, help="directory for partial-sum CSV tables")
    p.set_defaults(func=cmd_measure_analyze)

    p = ms.add_parser("coeffs", help="tabulate Fourier coefficients")
    common(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=100)
    p.add_argument("--two-sided", dest="two_sided", action="store_true")
    p.add_argument("--csv", default=None, help="CSV file with n, re, im, abs")
    p.set_defaults(func=cmd_measure_coeffs)

    p = ms.add_parser("norm-lb", help="lower bound on the L^p -> L^q norm of convolution")
    common(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_measure_norm_lb)

    p = ms.add_parser("construct", help="build nonnegative densities")
    p.add_argument("target", choices=["product-pair", "convex"])
    p.add_argument("--degree", type=int, default=4096, help="truncation degree")
    p.add_argument("--spec", default=None, help="convex_ac measure spec (target convex)")
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.add_argument("--out-dir", dest="out_dir", default=None,
                   help="directory for member specs and coefficient CSVs")
    p.set_defaults(func=cmd_measure_construct)

    oper = top.add_parser("operator", help="finite bi-stochastic Markov operators")
    os_ = oper.add_subparsers(dest="cmd", required=True)
    p = os_.add_parser("analyze", help="period, norms, certificate, rates")
    common(p)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-max", dest="n_max", type=int, default=60)
    p.add_argument("--n-limit", dest="n_limit", type=int, default=12,
                   help="run the subset brute force when n is at most this")
    p.add_argument("--csv", default=None, help="CSV file with the rate norms")
    p.set_defaults(func=cmd_operator_analyze)

    p = os_.add_parser("norm", help="L^p -> L^q norm")
    common(p)
    p.add_argument("--p", type=str, required=True, help="exponent, or inf")
    p.add_argument("--q", type=str, required=True, help="exponent, or inf")
    p.add_argument("--mean-zero", dest="mean_zero", action="store_true")
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_operator_norm)

    p = os_.add_parser("limits", help="distance of P^(nd+j) f from its cyclic limit")
    common(p)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--f", default=None, help="function values (JSON list); default spike at 0")
    p.add_argument("--n-max", dest="n_max", type=int, default=60)
    p.set_defaults(func=cmd_operator_limits)

    p = os_.add_parser("deterministic", help="deterministic and invariant sets (n <= 16)")
    common(p)
    p.add_argument("--n-limit", dest="n_limit", type=int, default=16)
    p.add_argument("--k-max", dest="k_max", type=int, default=12)
    p.set_defaults(func=cmd_operator_deterministic)

    ud = top.add_parser("ud", help="uniform distribution mod 1")
    us = ud.add_subparsers(dest="cmd", required=True)
    p = us.add_parser("test", help="Weyl sums, discrepancy and the DEL series")
    p.add_argument("--measure", required=True, help="measure spec (file or inline JSON)")
    p.add_argument("--seq", required=True, help="sequence spec (file or inline JSON)")
    p.add_argument("--N", type=int, default=100_000)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m-freqs", dest="m_freqs", type=_ints, default=[1])
    p.add_argument("--weyl-threshold", dest="weyl_threshold", type=float, default=0.05)
    p.add_argument("--discrepancy-threshold", dest="discrepancy_threshold", type=float, default=0.02)
    p.add_argument("--del-N", dest="del_N", type=int, default=2000)
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None, help="CSV file with per-sample statistics")
    p.set_defaults(func=cmd_ud_test)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            ap.error("--threads must be at least 1")
        set_threads(args.threads)
    try:
        report = args.func(args)
        _write(dumps(report), args.out)
    except InvariantBreach as exc:
        print(f"hypermarkov: invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except (SpecError, OutOfRangeError, NotErgodicError, ValueError) as exc:
        print(f"hypermarkov: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        set_threads(None)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
