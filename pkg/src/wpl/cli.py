"""Reproducible experiment harness.

Subcommands: sample, density, moments, charpoly, kernel, hardedge, cauchy,
bulk, acceptance.  Output is CSV (header row, shortest round-trip decimal
payload, trailing commented metadata block) or JSON mirroring the same
rows.  Exit codes: 0 ok, 1 check failure, 2 config error, 3 numerical
failure.  WPL_THREADS caps the worker pool.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from . import acceptance as acc
from . import finite_kernel as fk
from . import freeprob as fp
from . import hard_edge as he
from . import sampler as sp
from .config import effective_workers, load_config
from .errors import ConfigError, WplError
from .freeprob import EnsembleParams
from .hard_edge import HardEdgeParams

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def write_table(path, header, rows, meta: dict, fmt: str = "csv"):
    meta = dict(meta)
    meta.setdefault("version", __version__)
    meta["config_hash"] = _config_hash(meta)
    if fmt == "json":
        doc = {"columns": header, "rows": [[_fmt(v) for v in row] for row in rows], "meta": meta}
        text = json.dumps(doc, indent=1) + "\n"
    else:
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        lines += [f"# {k}={meta[k]}" for k in sorted(meta)]
        text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parse_grid(spec: str):
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ConfigError(f"grid must be lo:hi:count, got {spec!r}") from exc
    if n < 2 or not hi > lo:
        raise ConfigError("grid needs count >= 2 and hi > lo")
    return lo, hi, n


def _parse_ints(text: str) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated reals, got {text!r}") from exc


def _ensemble_from_args(args) -> EnsembleParams:
    nu = _parse_ints(args.nu) if args.nu is not None else (0,) * args.r
    mu = _parse_ints(args.mu) if args.mu is not None else (0,) * args.s
    return EnsembleParams(N=args.N, r=args.r, s=args.s, nu=nu, mu=mu)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_sample(args, cfg) -> int:
    params = _ensemble_from_args(args)
    scaling = sp.Scaling(args.scaling)
    workers = effective_workers(args.workers or cfg.mc.workers)
    samples = sp.sample_spectra(params, args.samples, sp.RngStream(args.seed), scaling, workers)
    rows = [
        (i, j, float(v), scaling.value)
        for i, smp in enumerate(samples)
        for j, v in enumerate(smp.eigenvalues)
    ]
    meta = {"seed": args.seed, "params": params, "samples": args.samples, "scaling": scaling.value}
    write_table(args.out, ["draw_index", "eig_index", "value", "scaling"], rows, meta, args.format)
    return EXIT_OK


def cmd_density(args, cfg) -> int:
    lo, hi, n = _parse_grid(args.grid)
    xs = np.geomspace(lo, hi, n) if args.log else np.linspace(lo, hi, n)
    rows = []
    worst = 0.0
    for x in xs:
        solver = fp.global_density(args.r, args.s, float(x))
        closed = math.nan
        if args.r == args.s:
            closed = fp.density_rr_closed(args.r, float(x))
        elif args.s == 0:
            closed = _density_s0_by_inversion(args.r, float(x))
        diff = abs(solver - closed) if not math.isnan(closed) else math.nan
        if not math.isnan(diff):
            worst = max(worst, diff)
        rows.append((float(x), closed, solver, diff))
    meta = {"r": args.r, "s": args.s, "max_discrepancy": worst}
    write_table(args.out, ["x", "rho_closed", "rho_solver", "abs_diff"], rows, meta, args.format)
    return EXIT_OK


def _density_s0_by_inversion(r: int, x: float) -> float:
    """Invert the parametric map x(phi) (decreasing) to evaluate the density."""
    lo, hi = 1e-9, math.pi / (r + 1) - 1e-9
    if not (fp.density_s0_parametric(r, hi).x <= x <= fp.density_s0_parametric(r, lo).x):
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fp.density_s0_parametric(r, mid).x > x:
            lo = mid
        else:
            hi = mid
    return fp.density_s0_parametric(r, 0.5 * (lo + hi)).rho


def cmd_moments(args, cfg) -> int:
    rows = []
    for p in range(1, args.pmax + 1):
        if args.s == 0:
            rows.append((p, str(fp.fuss_catalan(args.r, p)), float(fp.fuss_catalan(args.r, p))))
        elif args.s == args.r:
            frac = fp.moments_rr(args.r, p)
            rows.append((p, f"{frac.numerator}/{frac.denominator}", float(frac)))
        else:
            raise ConfigError("moments are implemented for s = 0 (Fuss-Catalan) and r = s")
    meta = {"r": args.r, "s": args.s, "pmax": args.pmax}
    write_table(args.out, ["p", "moment_exact", "moment_float"], rows, meta, args.format)
    return EXIT_OK


def cmd_charpoly(args, cfg) -> int:
    params = _ensemble_from_args(args)
    lams = _parse_floats(args.lam)
    rows = []
    if args.samples:
        mean, err = sp.mc_charpoly(
            params, np.asarray(lams), max(100, args.samples), sp.RngStream(args.seed),
            workers=effective_workers(args.workers or cfg.mc.workers),
        )
        for lam, m, e in zip(lams, np.atleast_1d(mean), np.atleast_1d(err)):
            exact = fk.charpoly_exact(params, lam)
            rows.append((lam, exact, float(m), float(e), (float(m) - exact) / float(e)))
        header = ["lambda", "exact", "mc_mean", "mc_stderr", "z_score"]
    else:
        for lam in lams:
            rows.append((lam, fk.charpoly_exact(params, lam)))
        header = ["lambda", "exact"]
    meta = {"params": params, "seed": args.seed, "samples": args.samples}
    write_table(args.out, header, rows, meta, args.format)
    return EXIT_OK


def cmd_kernel(args, cfg) -> int:
    params = _ensemble_from_args(args)
    xs = _parse_floats(args.x)
    ys = _parse_floats(args.y)
    rows = []
    for x in xs:
        for y in ys:
            if args.method in ("sum", "both"):
                rows.append((x, y, fk.kernel_n(params, x, y).value, "biorth_sum"))
            if args.method in ("contour", "both"):
                rows.append((x, y, fk.kernel_n_contour(params, x, y, tol=cfg.quad.tol).value, "double_contour"))
    meta = {"params": params, "method": args.method}
    write_table(args.out, ["x", "y", "K", "method"], rows, meta, args.format)
    return EXIT_OK


def cmd_hardedge(args, cfg) -> int:
    nu = _parse_ints(args.nu) if args.nu is not None else (0,) * args.r
    params = HardEdgeParams(r=args.r, nu=nu)
    rows = []
    header = ["x", "y", "K", "method"]
    if args.diag:
        lo, hi, n = _parse_grid(args.diag)
        xs = np.linspace(lo, hi, n)
        ks = he.k_hard_diag(params, xs, tol=cfg.quad.tol)
        if args.r == 1:
            header = ["x", "y", "K", "method", "bessel_reference", "abs_diff"]
            ref = he.bessel_density(params.nu[0], xs)
            rows = [
                (float(x), float(x), float(k), "integral", float(b), abs(float(k) - float(b)))
                for x, k, b in zip(xs, ks, ref)
            ]
        else:
            rows = [(float(x), float(x), float(k), "integral") for x, k in zip(xs, ks)]
    else:
        xs = _parse_floats(args.x)
        ys = _parse_floats(args.y)
        for x in xs:
            for y in ys:
                if args.method in ("integral", "both"):
                    rows.append((x, y, he.k_hard(params, x, y, tol=cfg.quad.tol).value, "integral"))
                if args.method in ("cd", "both"):
                    rows.append((x, y, he.k_hard_cd(params, x, y, tol=cfg.quad.tol).value, "christoffel_darboux"))
    meta = {"r": args.r, "nu": nu, "method": args.method}
    write_table(args.out, header, rows, meta, args.format)
    return EXIT_OK


def cmd_cauchy(args, cfg) -> int:
    rng = sp.RngStream(args.seed)
    rows = []
    scale = float(args.N) ** 2
    for i in range(args.draws):
        eig = sp.sample_cauchy_triple(args.N, args.a, args.b, rng.substream(i))
        for j, v in enumerate(eig):
            scaled = float(v) * scale
            if scaled <= args.max_x:
                rows.append((i, j, scaled))
    meta = {"N": args.N, "a": args.a, "b": args.b, "draws": args.draws, "seed": args.seed,
            "scaling": "hard_edge(xN^2)", "max_x": args.max_x}
    write_table(args.out, ["draw_index", "eig_index", "scaled_value"], rows, meta, args.format)
    return EXIT_OK


def cmd_bulk(args, cfg) -> int:
    lo, hi, n = _parse_grid(args.grid)
    rows = []
    for t in np.linspace(lo, hi, n):
        prod, ref = he.bulk_experiment(args.r, args.c, 0.0, float(t))
        rows.append((float(t), prod, ref, prod - ref))
    meta = {"r": args.r, "c": args.c}
    write_table(args.out, ["y_minus_x", "scaled_product", "sine_kernel_sq", "diff"], rows, meta, args.format)
    return EXIT_OK


def cmd_acceptance(args, cfg) -> int:
    if args.list:
        for name in acc.ALL_CHECKS:
            print(name)
        return EXIT_OK
    names = args.only or None
    results = acc.run_checks(names, tol_scale=args.tol_scale)
    doc = {
        "tol_scale": args.tol_scale,
        "checks": [
            {
                "name": r.name, "value": float(r.value), "reference": float(r.reference),
                "tolerance": float(r.tolerance), "passed": bool(r.passed),
                "seconds": round(r.seconds, 2), "detail": _jsonable(r.detail),
            }
            for r in results
        ],
        "all_passed": bool(all(r.passed for r in results)),
    }
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if doc["all_passed"] else EXIT_CHECK_FAILURE


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wpl", description=__doc__)
    parser.add_argument("--config", help="flat key-value config file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, ensemble=True):
        p.add_argument("--out", default="-", help="output path or - for stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if ensemble:
            p.add_argument("--N", type=int, default=4)
            p.add_argument("--r", type=int, default=1)
            p.add_argument("--s", type=int, default=0)
            p.add_argument("--nu", help="comma-separated, defaults to zeros")
            p.add_argument("--mu", help="comma-separated, defaults to zeros")

    p = sub.add_parser("sample", help="draw product-ensemble spectra")
    common(p)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--scaling", choices=[v.value for v in sp.Scaling], default="raw")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("density", help="global density: closed form vs solver")
    common(p, ensemble=False)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--grid", required=True, help="lo:hi:count")
    p.add_argument("--log", action="store_true")
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("moments", help="exact moment sequences")
    common(p, ensemble=False)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--pmax", type=int, default=6)
    p.set_defaults(fn=cmd_moments)

    p = sub.add_parser("charpoly", help="generalized characteristic polynomial")
    common(p)
    p.add_argument("--lam", default="0.5,1,2")
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo draws (0: exact only)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(fn=cmd_charpoly)

    p = sub.add_parser("kernel", help="finite-N correlation kernel")
    common(p)
    p.add_argument("--x", default="1.0")
    p.add_argument("--y", default="1.0")
    p.add_argument("--method", choices=("sum", "contour", "both"), default="both")
    p.set_defaults(fn=cmd_kernel)

    p = sub.add_parser("hardedge", help="hard-edge scaled kernel")
    common(p, ensemble=False)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--nu")
    p.add_argument("--diag", help="lo:hi:count diagonal grid")
    p.add_argument("--x", default="1.0")
    p.add_argument("--y", default="2.0")
    p.add_argument("--method", choices=("integral", "cd", "both"), default="integral")
    p.set_defaults(fn=cmd_hardedge)

    p = sub.add_parser("cauchy", help="Cauchy two-matrix bridge sampling")
    common(p, ensemble=False)
    p.add_argument("--N", type=int, default=60)
    p.add_argument("--a", type=int, default=0)
    p.add_argument("--b", type=int, default=0)
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-x", type=float, default=5.0)
    p.set_defaults(fn=cmd_cauchy)

    p = sub.add_parser("bulk", help="hard-edge-to-bulk comparison (exploratory)")
    common(p, ensemble=False)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--c", type=float, default=95.0)
    p.add_argument("--grid", default="0:2:9")
    p.set_defaults(fn=cmd_bulk)

    p = sub.add_parser("acceptance", help="run the acceptance suite")
    common(p, ensemble=False)
    p.add_argument("--list", action="store_true", help="list check names without running")
    p.add_argument("--only", nargs="*", help="subset of check names")
    p.add_argument("--tol-scale", type=float, default=1.0,
                   help="scale statistical tolerances (0.01 demonstrates failures)")
    p.add_argument("--json", help="write machine-readable report here")
    p.set_defaults(fn=cmd_acceptance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.fn(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except WplError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
