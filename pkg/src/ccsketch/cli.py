"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import entropy as ent
from .errors import CCSketchError, ParameterError
from .estimators import estimate, sketch_kind_for
from .harness import (
    DEFAULT_ALPHAS,
    DEFAULT_KS,
    DEFAULT_REPS,
    ExperimentConfig,
    emit_csv,
    load_sparse_vectors,
    min_mse_curves,
    read_csv,
    run_mse_experiment,
    synthesize_zipf,
    write_sparse_vectors,
    zipf_name,
)
from .sketch import MAGIC, KINDS, ProjectionSketch, deserialize, merge, read_stream, serialize
from .stable import ESTIMATORS

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(values):
    out = []
    for chunk in values or ():
        for part in chunk.split(","):
            if part.strip():
                try:
                    out.append(float(part))
                except ValueError:
                    raise UsageError(f"not a number: {part!r}") from None
    return out


def _ints(values):
    out = []
    for x in _floats(values):
        if x != int(x):
            raise UsageError(f"not an integer: {x}")
        out.append(int(x))
    return out


def _names(values, allowed, flag):
    out = []
    for chunk in values or ():
        for part in chunk.split(","):
            part = part.strip()
            if part:
                if part not in allowed:
                    raise UsageError(f"{flag}: {part!r} not in {allowed}")
                out.append(part)
    return out


def _zipf_spec(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--zipf expects D,s,M, got {text!r}")
    try:
        d, s, m = int(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise UsageError(f"--zipf expects D,s,M, got {text!r}") from None
    return d, s, m


def _single(values, flag, kind=float):
    vals = _floats(values)
    if len(vals) != 1:
        raise UsageError(f"{flag} needs exactly one value")
    return kind(vals[0])


def _read_sketch(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def cmd_sketch_build(args):
    alpha = _single(args.alpha, "--alpha")
    k = _single(args.k, "--k", int)
    kind = args.kind
    if kind is None:
        kind = sketch_kind_for(args.estimator) if args.estimator else "skewed"
    sk = ProjectionSketch(alpha, kind, k, args.seed, args.dimension)
    if args.input == "-":
        sk.extend(read_stream(sys.stdin))
    else:
        with open(args.input, encoding="utf-8") as fh:
            sk.extend(read_stream(fh))
    with open(args.output, "wb") as fh:
        fh.write(serialize(sk))
    print(f"{sk!r} f1={sk.f1_counter!r}")


def cmd_sketch_merge(args):
    sketches = [_read_sketch(p) for p in args.sketches]
    out = sketches[0]
    for other in sketches[1:]:
        out = merge(out, other)
    with open(args.output, "wb") as fh:
        fh.write(serialize(out))
    print(f"{out!r} f1={out.f1_counter!r}")


def cmd_estimate(args):
    sk = _read_sketch(args.input)
    est = estimate(sk, args.estimator)
    print(f"estimator={est.estimator_kind} alpha={est.alpha} k={est.k}")
    print(f"F_alpha={est.value!r}")
    print(f"predicted_relative_variance={est.predicted_relative_variance!r}")


def _is_sketch_file(path):
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def cmd_entropy(args):
    routes = _names(args.route, ent.ROUTES, "--route") or list(ent.ROUTES)
    if _is_sketch_file(args.input):
        if not args.estimator:
            raise UsageError("--estimator is required for a sketch input")
        sk = _read_sketch(args.input)
        f_hat = estimate(sk, args.estimator)
        print(f"estimator={args.estimator} alpha={sk.alpha} k={sk.k} F1={sk.f1_counter!r}")
        for route in routes:
            e = ent.shannon_via(f_hat, sk.f1_counter, route)
            print(f"{route}={e.value!r} predicted_variance={e.predicted_variance!r}")
        return
    alphas = _floats(args.alpha)
    for name, v in load_sparse_vectors(args.input):
        print(f"{name}: nnz={v.nnz} F1={v.f1!r} H={ent.exact_shannon(v)!r}")
        for a in alphas:
            print(f"  alpha={a} renyi={ent.exact_renyi(v, a)!r} tsallis={ent.exact_tsallis(v, a)!r}")


def _experiment_vectors(args):
    vectors = []
    if args.input:
        vectors += load_sparse_vectors(args.input)
    for spec in args.zipf or ():
        d, s, m = _zipf_spec(spec)
        vectors.append((zipf_name(d, s, m), synthesize_zipf(d, s, m, args.seed)))
    if not vectors:
        raise UsageError("experiment run needs --input and/or --zipf")
    return vectors


def cmd_experiment_run(args):
    routes = _names(args.route, ent.ROUTES, "--route") or list(ent.ROUTES)
    cfg = ExperimentConfig(
        vectors=_experiment_vectors(args),
        alpha_grid=_floats(args.alpha) or DEFAULT_ALPHAS,
        k_grid=_ints(args.k) or DEFAULT_KS,
        estimators=_names(args.estimator, ESTIMATORS, "--estimator") or ESTIMATORS,
        targets=ExperimentConfig.targets_for_routes(routes),
        repetitions=args.reps,
        seed=args.seed,
        backend=args.backend,
        output=args.output,
    )
    report = run_mse_experiment(cfg)
    emit_csv(report, args.output)
    print(f"wrote {len(report)} rows to {args.output} ({len(report.warnings)} skipped pairs)")


def cmd_experiment_min_curves(args):
    report = min_mse_curves(read_csv(args.input))
    emit_csv(report, args.output)
    print(f"wrote {len(report)} rows to {args.output}")


def cmd_synth_zipf(args):
    d, s, m = _zipf_spec(args.zipf)
    v = synthesize_zipf(d, s, m, args.seed, shuffle=args.shuffle)
    name = args.name or zipf_name(d, s, m)
    write_sparse_vectors(args.output, [(name, v)])
    print(f"{name}: nnz={v.nnz} F1={v.f1!r} H={ent.exact_shannon(v)!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccsketch", description="Compressed Counting sketches and entropy experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sk = sub.add_parser("sketch", help="build or merge sketches")
    sksub = sk.add_subparsers(dest="action", required=True, parser_class=_Parser)
    b = sksub.add_parser("build", help="sketch an index<TAB>increment stream")
    b.add_argument("--input", required=True, help="stream file, or - for stdin")
    b.add_argument("--output", required=True)
    b.add_argument("--alpha", action="append", required=True)
    b.add_argument("--k", action="append", required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--dimension", type=int, default=2**32)
    b.add_argument("--kind", choices=KINDS)
    b.add_argument("--estimator", choices=ESTIMATORS, help="pick the sketch kind this estimator needs")
    b.set_defaults(func=cmd_sketch_build)
    m = sksub.add_parser("merge", help="add sketches built with identical parameters")
    m.add_argument("sketches", nargs="+")
    m.add_argument("--output", required=True)
    m.set_defaults(func=cmd_sketch_merge)

    e = sub.add_parser("estimate", help="estimate F_(alpha) from a sketch")
    e.add_argument("--input", required=True)
    e.add_argument("--estimator", choices=ESTIMATORS, required=True)
    e.set_defaults(func=cmd_estimate)

    h = sub.add_parser("entropy", help="entropy from a sketch, or exact entropies of a vector file")
    h.add_argument("--input", required=True)
    h.add_argument("--estimator", choices=ESTIMATORS)
    h.add_argument("--route", action="append")
    h.add_argument("--alpha", action="append", help="alphas for exact Renyi/Tsallis of a vector file")
    h.set_defaults(func=cmd_entropy)

    x = sub.add_parser("experiment", help="Monte-Carlo MSE experiments")
    xsub = x.add_subparsers(dest="action", required=True, parser_class=_Parser)
    r = xsub.add_parser("run")
    r.add_argument("--input", help="vector file")
    r.add_argument("--zipf", action="append", help="synthetic vector D,s,M (repeatable)")
    r.add_argument("--alpha", action="append")
    r.add_argument("--k", action="append")
    r.add_argument("--estimator", action="append")
    r.add_argument("--route", action="append")
    r.add_argument("--reps", type=int, default=DEFAULT_REPS)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--backend", choices=("stable", "project"), default="stable")
    r.add_argument("--output", required=True)
    r.set_defaults(func=cmd_experiment_run)
    c = xsub.add_parser("min-curves")
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.set_defaults(func=cmd_experiment_min_curves)

    s = sub.add_parser("synth", help="synthetic data")
    ssub = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    z = ssub.add_parser("zipf")
    z.add_argument("--zipf", required=True, help="D,s,M")
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--shuffle", action="store_true", help="scatter ranks over indices using --seed")
    z.add_argument("--name")
    z.add_argument("--output", required=True)
    z.set_defaults(func=cmd_synth_zipf)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"ccsketch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"ccsketch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CCSketchError, OSError) as exc:
        print(f"ccsketch: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
