"""Command-line entry point: ``bench``, ``assemble`` and ``verify``."""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
import time

from .bench import BACKENDS, BenchConfig, ConfigError, backend_function, emit_report, normalize_backend, run_bench
from .problem import AssemblyStats
from .sparse import frobenius_rel_diff, write_matrix_market

VERIFY_TOL = 1e-12


def _load(path) -> BenchConfig:
    try:
        return BenchConfig.from_json(path)
    except OSError as exc:
        raise SystemExit(f"error: cannot read config: {exc}")
    except (ConfigError, ValueError) as exc:
        raise SystemExit(f"error: invalid config: {exc}")


def cmd_bench(args) -> int:
    config = _load(args.config)
    records = run_bench(config, threads=args.threads, seed=args.seed)
    emit_report(records, args.out, args.format, metadata={"threads": args.threads, "seed": args.seed})
    failed = [r for r in records if r.error]
    print(f"{len(records)} records written to {args.out} ({len(failed)} failed)")
    return 1 if failed else 0


def cmd_assemble(args) -> int:
    config = _load(args.config)
    cells = config.cells()
    if len(cells) != 1:
        raise SystemExit("error: assemble needs a configuration with a single degree, element count and layer count")
    p, elements, m = cells[0]
    setup = config.setup(p, elements, m, seed=args.seed)
    fn = backend_function(args.backend, decompose_angles=args.decompose_angles)
    stats = AssemblyStats()
    t0 = time.perf_counter()
    K = fn(setup, stats=stats, threads=args.threads)
    elapsed = time.perf_counter() - t0
    print(
        f"backend={normalize_backend(args.backend)} p={p} elements={elements[0]}x{elements[1]} m={m} "
        f"m_bar={setup.layup.m_bar} size={K.shape[0]} nnz={K.nnz} time_s={elapsed:.4g}"
    )
    if args.export_matrix:
        write_matrix_market(K, args.export_matrix)
        print(f"matrix written to {args.export_matrix}")
    return 0


def cmd_verify(args) -> int:
    config = _load(args.config)
    variants = [(b, False) for b in BACKENDS] + [("fast", True)]
    names = [b if not d else "fast_decomposed" for b, d in variants]
    worst = {pair: 0.0 for pair in itertools.combinations(names, 2)}
    for p, elements, m in config.cells():
        setup = config.setup(p, elements, m, seed=args.seed)
        mats = [backend_function(b, decompose_angles=d)(setup, threads=args.threads) for b, d in variants]
        for (i, a), (j, b) in itertools.combinations(enumerate(names), 2):
            worst[(a, b)] = max(worst[(a, b)], frobenius_rel_diff(mats[i], mats[j]))
    ok = all(v <= VERIFY_TOL for v in worst.values())
    for (a, b), v in worst.items():
        print(f"{a} vs {b}: max rel diff {v:.3e}")
    print("OK" if ok else f"FAIL: differences above {VERIFY_TOL:g}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laminate-iga", description="Layered IGA stiffness assembly benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON problem/grid configuration")
        p.add_argument("--threads", type=int, default=1, help="worker threads per assembly")
        p.add_argument("--seed", type=int, default=0, help="seed for random layups")

    b = sub.add_parser("bench", help="time backends over a grid and write a report")
    common(b)
    b.add_argument("--out", required=True)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("assemble", help="assemble one problem and optionally export it")
    common(a)
    a.add_argument("--backend", choices=("standard", "fast", "voigt-free", "voigt_free"), default="fast")
    a.add_argument("--decompose-angles", action="store_true", help="fast backend: per-material angle decomposition")
    a.add_argument("--export-matrix", metavar="PATH", help="Matrix Market output file")
    a.set_defaults(func=cmd_assemble)

    v = sub.add_parser("verify", help="compare all backends on every grid cell")
    common(v)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.threads < 1:
        raise SystemExit("error: --threads must be >= 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
