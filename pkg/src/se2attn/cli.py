"""Command-line entry point: ``se2attn <command> ...``.

Exit codes: 0 on success or a passing check, 1 when a check exceeds its
tolerance, 2 on invalid arguments or I/O errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import statistics
import sys
import time

import numpy as np

from . import fourier
from .attention import (
    apply_global_transform,
    random_batch,
    relative_attention_linear,
    relative_attention_quadratic,
)
from .encoding import EncodingConfig, Exactness, Family, load_config
from .geometry import Pose2

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

SE2_FOURIER_EQUIVALENCE_TOL = 5e-3
SE2_FOURIER_INVARIANCE_TOL = 1e-4
EXACT_TOL = 1e-10


class UsageError(Exception):
    pass


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(t) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def _fmt(x) -> str:
    return repr(float(x))


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _encoding_from_args(args) -> EncodingConfig:
    if getattr(args, "config", None):
        try:
            return load_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from exc
    family = Family(args.family)
    dim = args.dim
    if dim is None:
        dim = 6 if family is Family.SE2_FOURIER else {Family.ROPE1D: 2, Family.ROPE2D: 4, Family.SE2_REP: 3}[family]
    kwargs = dict(base_scale=args.scale, ratio=args.scale_ratio)
    if family is Family.SE2_FOURIER:
        kwargs.update(basis_size=args.basis_size, points=args.points)
    return EncodingConfig.for_token_dim(family, dim, **kwargs)


def _add_encoding_args(p, default_family=None):
    p.add_argument("--family", choices=[f.value for f in Family], default=default_family, required=default_family is None)
    p.add_argument("--dim", type=int, default=None, help="token width d (a multiple of the family block width)")
    p.add_argument("--basis-size", type=int, default=12, help="F for se2fourier blocks")
    p.add_argument("--points", type=int, default=None, help="quadrature points for se2fourier (default 2F)")
    p.add_argument("--scale", type=float, default=1.0, help="spatial scale of the first block")
    p.add_argument("--scale-ratio", type=float, default=0.5, help="scale ratio between consecutive blocks")
    p.add_argument("--config", default=None, help="key=value encoding file; overrides the encoding flags")


def _batch_for(cfg, n, m, seed, extent, radius):
    if cfg.family is Family.SE2_FOURIER and radius is None:
        radius = 2.0
    rng = np.random.default_rng(seed)
    return random_batch(cfg, n, m, rng, extent=extent, radius=radius, unit_norm=cfg.family is Family.SE2_FOURIER)


def cmd_error_sweep(args) -> int:
    stats = fourier.error_sweep(args.radii, args.basis_sizes, args.samples, args.seed, args.points)
    with _open_out(args.out) as fh:
        fh.write(f"# reference: eps_fp16={_fmt(fourier.EPS_FP16)}\n")
        fh.write(f"# reference: eps_bf16={_fmt(fourier.EPS_BF16)}\n")
        w = _writer(fh)
        w.writerow(["radius", "basis_size", "mean_error", "p025_error", "p975_error", "samples", "seed"])
        for s in stats:
            w.writerow(
                [_fmt(s.radius), s.basis_size, _fmt(s.mean_error), _fmt(s.p025_error), _fmt(s.p975_error), s.samples, s.seed]
            )
    return EXIT_OK


def cmd_equivalence(args) -> int:
    cfg = _encoding_from_args(args)
    if args.n < 1 or args.m < 1:
        raise UsageError("--n and --m must be >= 1")
    batch = _batch_for(cfg, args.n, args.m, args.seed, args.extent, args.radius)
    quad = relative_attention_quadratic(batch, cfg)
    lin = relative_attention_linear(batch, cfg)
    diff = lin.outputs - quad.outputs
    max_abs = float(np.max(np.abs(diff)))
    spectral = fourier.spectral_norm(diff)
    tol = args.tolerance
    if tol is None:
        tol = EXACT_TOL if cfg.exactness is Exactness.EXACT else SE2_FOURIER_EQUIVALENCE_TOL
    ok = max_abs <= tol
    print(f"family={cfg.family.value} n={args.n} m={args.m} d={cfg.token_dim} c={cfg.projected_dim}")
    print(f"max_abs_diff={max_abs:.3e} spectral_diff={spectral:.3e} tolerance={tol:.1e}")
    print(f"aux_elements_peak quadratic={quad.aux_elements_peak} linear={lin.aux_elements_peak}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_invariance(args) -> int:
    cfg = _encoding_from_args(args)
    if args.n < 1 or args.m < 1:
        raise UsageError("--n and --m must be >= 1")
    batch = _batch_for(cfg, args.n, args.m, args.seed, args.extent, args.radius)
    given = [args.tx, args.ty, args.ttheta]
    if all(v is None for v in given):
        rng = np.random.default_rng([args.seed, 1])
        tx, ty = rng.uniform(-args.max_shift, args.max_shift, 2)
        ttheta = rng.uniform(-math.pi, math.pi)
    else:
        tx, ty, ttheta = (0.0 if v is None else v for v in given)
    z = tx if cfg.family is Family.ROPE1D else Pose2(tx, ty, ttheta)
    base = relative_attention_linear(batch, cfg).outputs
    moved = relative_attention_linear(apply_global_transform(batch, z), cfg).outputs
    max_abs = float(np.max(np.abs(moved - base)))
    tol = args.tolerance
    if tol is None:
        tol = EXACT_TOL if cfg.exactness is Exactness.EXACT else SE2_FOURIER_INVARIANCE_TOL
    ok = max_abs <= tol
    print(f"family={cfg.family.value} transform=({float(tx)!r}, {float(ty)!r}, {float(ttheta)!r})")
    print(f"max_abs_diff={max_abs:.3e} tolerance={tol:.1e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_coeffs(args) -> int:
    c = fourier.coefficients(args.x, args.y, args.basis_size, args.axis, args.points)
    curve = fourier.target_curve(args.x, args.y, args.basis_size, args.grid, args.points, args.axis)
    with _open_out(args.out) as fh:
        w = _writer(fh)
        w.writerow(["i", "gamma", "lambda"])
        for i, (g, l) in enumerate(zip(c.gamma, c.lambda_)):
            w.writerow([i, _fmt(g), _fmt(l)])
        fh.write("\n")
        w.writerow(["theta", "exact", "approx"])
        for row in zip(curve.theta, curve.exact, curve.approx):
            w.writerow([_fmt(v) for v in row])
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _encoding_from_args(args)
    if not args.sizes or any(n < 1 for n in args.sizes) or args.repeats < 1:
        raise UsageError("--sizes must be positive integers and --repeats >= 1")
    if args.m is not None and args.m < 1:
        raise UsageError("--m must be >= 1")
    runners = {"quadratic": relative_attention_quadratic, "linear": relative_attention_linear}
    for v in args.variants:
        if v not in runners:
            raise UsageError(f"unknown variant {v!r}")
    rows = []
    for n in args.sizes:
        m = n if args.m is None else args.m
        batch = _batch_for(cfg, n, m, args.seed, 8.0, None)
        for variant in args.variants:
            times = []
            peak = None
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                res = runners[variant](batch, cfg)
                times.append((time.perf_counter() - t0) * 1e3)
                peak = res.aux_elements_peak
            rows.append([cfg.family.value, n, m, cfg.token_dim, cfg.projected_dim, variant, f"{statistics.median(times):.3f}", peak])
    with _open_out(args.out) as fh:
        w = _writer(fh)
        w.writerow(["family", "n", "m", "d", "c", "variant", "wall_ms_median", "aux_elements_peak"])
        w.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="se2attn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("error-sweep", help="spectral-norm approximation error over radius and basis size")
    p.add_argument("--radii", type=_csv_list(float), default=[1.0, 2.0, 4.0, 8.0])
    p.add_argument("--basis-sizes", type=_csv_list(int), default=[8, 12, 18, 28])
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--points", type=int, default=None, help="quadrature points (default 2F per basis size)")
    p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    p.set_defaults(func=cmd_error_sweep)

    for name, func, help_text in (
        ("equivalence", cmd_equivalence, "compare quadratic and linear relative attention"),
        ("invariance", cmd_invariance, "compare outputs before and after a global transform"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_encoding_args(p)
        p.add_argument("--n", type=int, default=32)
        p.add_argument("--m", type=int, default=32)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--extent", type=float, default=8.0, help="positions uniform in [-extent, extent]^2")
        p.add_argument("--radius", type=float, default=None, help="positions uniform in a disc (se2fourier default 2)")
        p.add_argument("--tolerance", type=float, default=None)
        p.set_defaults(func=func)
    p.add_argument("--tx", type=float, default=None)
    p.add_argument("--ty", type=float, default=None)
    p.add_argument("--ttheta", type=float, default=None)
    p.add_argument("--max-shift", type=float, default=100.0, help="bound on |x|, |y| of a random transform")

    p = sub.add_parser("coeffs", help="Fourier coefficients and target/approximation curve for one key")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--basis-size", type=int, default=12)
    p.add_argument("--axis", choices=[a.value for a in fourier.Axis], default="x")
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--grid", type=int, default=361)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("bench", help="wall time and auxiliary memory of both attention variants")
    _add_encoding_args(p, default_family="rope2d")
    p.add_argument("--sizes", type=_csv_list(int), default=[64, 128, 256], help="query counts N")
    p.add_argument("--m", type=int, default=None, help="fixed key count (default M = N)")
    p.add_argument("--variants", type=_csv_list(str), default=["quadratic", "linear"])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"se2attn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
