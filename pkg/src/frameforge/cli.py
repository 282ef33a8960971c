"""Command-line front door.

Exit codes: 0 certified success, 2 a method could not certify its result,
1 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
import time

import numpy as np

from . import io
from .continuous import MAX_CELLS, discretize_general, discretize_parseval
from .core import DEFAULT_TOLERANCE, Frame, frame_bounds, rayleigh_probe
from .errors import FrameError, InvalidInput, NotAFrame
from .funtf import build_funtf, exact_gram_checks, exhaustive_basis_audit
from .partition import EXHAUSTIVE_LIMIT, partition_general_frame, subset_tight_frame
from .scalable import SamplerConfig, ScalableFrame, quantize_scaling, sample_scalable
from .synth import tight_onb_union


def _load_frame(args):
    if not args.input:
        raise InvalidInput("--input is required")
    return io.frame_from_json(io.load_json(args.input))


def _scalable(args):
    """Frame file whose weights are the squared scalars a_i^2 of unweighted vectors."""
    f = _load_frame(args)
    if f.weights is None:
        raise InvalidInput("scalable input needs weights (squared scalars)")
    base = Frame(f.field, f.dim, f.vectors)
    return ScalableFrame.certify(base, list(f.weights), args.tolerance)


def cmd_bounds(args):
    f = _load_frame(args)
    b = rayleigh_probe(f, args.probe, args.seed, args.tolerance) if args.probe else frame_bounds(f, args.tolerance)
    print(f"A={b.lower:.12g} B={b.upper:.12g}")
    if args.output:
        io.write_text(args.output, io.dumps({"bounds": b.as_pair(), "method": b.method}))
    return 0


def cmd_partition(args):
    res = partition_general_frame(_load_frame(args), args.tolerance, args.exhaustive_limit)
    io.write_text(args.output, io.dumps(res.to_json()))
    return 0


def cmd_subset(args):
    idx, b = subset_tight_frame(_load_frame(args), args.n, args.tolerance, args.exhaustive_limit)
    io.write_text(args.output, io.dumps({"indices": [int(i) for i in idx], "bounds": b.as_pair()}))
    return 0


def cmd_quantize(args):
    q = quantize_scaling(_scalable(args), args.n, args.tolerance, exhaustive_limit=args.exhaustive_limit)
    out = {"N": q.N, "multiplicities": [int(m) for m in q.multiplicities],
           "scalars": [f"sqrt({int(m)})/{q.N}" for m in q.multiplicities],
           "bounds": q.bounds.as_pair(), "subset_bounds": q.subset_bounds.as_pair(), "copies": q.copies}
    io.write_text(args.output, io.dumps(out))
    return 0


def cmd_sample(args):
    sf = _scalable(args)
    if args.epsilon is not None and sf.epsilon > args.epsilon:
        raise InvalidInput(f"frame is only within {sf.epsilon:.3e} of Parseval (> {args.epsilon})")
    res = sample_scalable(sf, SamplerConfig(tolerance=args.tolerance, exhaustive_limit=args.exhaustive_limit))
    io.write_text(args.output, io.dumps(res.to_json()))
    return 0


def cmd_discretize(args):
    if not args.input:
        raise InvalidInput("--input is required")
    model = io.model_from_json(io.load_json(args.input))
    eps = 0.5 if args.epsilon is None else args.epsilon
    kw = {"resolution": args.resolution, "tolerance": args.tolerance, "max_cells": args.max_cells}
    if args.net_epsilon is not None:
        kw["net_epsilon"] = args.net_epsilon
    run = discretize_general if args.general else discretize_parseval
    res = run(model, eps, **kw)
    out = res.to_json()
    out["summary"] = {k: v for k, v in res.envelope.items() if k != "sampler_envelope"}
    io.write_text(args.output, io.dumps(out))
    return 0


def cmd_counterexample(args):
    n = 3 if args.n is None else args.n
    checks = exact_gram_checks(n)
    print(f"n={n}: columns orthogonal={checks['columns_orthogonal']} "
          f"aligned |<f,g>|={checks['aligned_inner']} (expected {checks['aligned_expected']})")
    if not args.exhaustive:
        return 0
    best, subset, rows = exhaustive_basis_audit(build_funtf(n))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subset", "case", "bound"])
    for s, case, bound in rows:
        w.writerow([" ".join(map(str, s)), case, format(bound, ".17g")])
    if args.output:
        io.write_text(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    print(f"max basis Riesz bound={best:.12g} subset={' '.join(map(str, subset))}", file=sys.stderr)
    return 0


def cmd_bench(args):
    rng = np.random.default_rng(args.seed)
    print("dim,bound,vectors,parts,seconds")
    for size in args.sizes:
        for _ in range(args.seeds):
            d = int(rng.integers(1, 5))
            f = tight_onb_union(rng, d, float(size))
            t = time.perf_counter()
            res = partition_general_frame(f, args.tolerance, args.exhaustive_limit)
            print(f"{d},{size},{len(f)},{len(res.parts)},{time.perf_counter() - t:.4f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="frameforge", description="Frame partition, sampling and discretization tools.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i")
    common.add_argument("--output", "-o")
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    common.add_argument("--exhaustive-limit", type=int, default=EXHAUSTIVE_LIMIT)
    common.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("bounds", parents=[common], help="eigen (or probed) frame bounds")
    s.add_argument("--probe", type=int, default=0, help="random unit probes instead of eigenvalues")
    s.set_defaults(func=cmd_bounds)
    s = sub.add_parser("partition", parents=[common], help="split a frame into well-conditioned parts")
    s.set_defaults(func=cmd_partition)
    for name, func, text in (("subset", cmd_subset, "tight sub-multiset with bounds in [1, 1 + 1/N]"),
                             ("quantize", cmd_quantize, "scalars sqrt(m)/N for an exactly scalable frame")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--n", type=int, required=True)
        s.set_defaults(func=func)
    s = sub.add_parser("sample", parents=[common], help="sample a near-Parseval scaled frame")
    s.add_argument("--epsilon", type=float)
    s.set_defaults(func=cmd_sample)
    s = sub.add_parser("discretize", parents=[common], help="sample a continuous frame model")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--net-epsilon", type=float)
    s.add_argument("--resolution", type=int, default=64)
    s.add_argument("--max-cells", type=int, default=MAX_CELLS, help="cap on epsilon-net cells")
    s.add_argument("--general", action="store_true", help="normalize a non-Parseval model first")
    s.set_defaults(func=cmd_discretize)
    s = sub.add_parser("counterexample", parents=[common], help="Hadamard FUNTF basis audit")
    s.add_argument("--n", type=int)
    s.add_argument("--exhaustive", action="store_true")
    s.set_defaults(func=cmd_counterexample)
    s = sub.add_parser("bench", parents=[common], help="time the partition on random tight frames")
    s.add_argument("--sizes", type=float, nargs="+", default=[100.0, 500.0, 2000.0])
    s.add_argument("--seeds", type=int, default=3)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not args.tolerance > 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (InvalidInput, NotAFrame) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FrameError as exc:
        print(f"not certified: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
