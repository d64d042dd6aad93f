"""Command line interface.

Subcommands: ``energy`` (evaluate breakdowns), ``geom`` (solve the
geometric problem for a datum set), ``denoise`` (layered solve of the
functional problem), ``cheeger``, ``sweep`` (distance vs fidelity
table) and ``verify`` (the theorem suite).  Flags may be preloaded
from a ``key=value`` config file; the output directory may also come
from the ``FRACTV_OUT_DIR`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .energy import frac_perimeter, frac_total_variation, functional_energy, geometric_energy
from .grid import PixelSet
from .kernel import build_kernel
from .mincut import build_cut_problem, parametric_sweep, solve_cut
from .netpbm import read_field, read_pbm, write_field, write_pbm
from .solvers import cheeger, solve_functional
from .verify import VerifyConfig, run_suite

ENV_OUT_DIR = "FRACTV_OUT_DIR"


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(payload: dict, as_json: bool) -> None:
    payload = _jsonify(payload)
    if as_json:
        json.dump(payload, sys.stdout)
        sys.stdout.write("\n")
    else:
        for key, val in payload.items():
            print(f"{key}: {val}")


def _read_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {line!r}")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _setting(args, cfg: dict, name: str, cast, default):
    cli_val = getattr(args, name, None)
    if cli_val is not None:
        return cli_val
    if name in cfg:
        return cast(cfg[name])
    return default


def _out_dir(args, cfg) -> str | None:
    env = os.environ.get(ENV_OUT_DIR)
    if env:
        return env
    return _setting(args, cfg, "out_dir", str, None)


def _parse_lambdas(schedule: str) -> list[float]:
    if ":" in schedule:
        parts = [float(x) for x in schedule.split(":")]
        if len(parts) != 3:
            raise ValueError("lambda range must be START:STOP:STEP")
        start, stop, step = parts
        if step <= 0:
            raise ValueError("lambda range step must be positive")
        return [float(v) for v in np.arange(start, stop + step / 2, step)]
    return [float(x) for x in schedule.split(",") if x.strip()]


def _load_input(path: str, spacing: float):
    if str(path).lower().endswith(".pbm"):
        return read_pbm(path, spacing)
    return read_field(path, spacing)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fractv",
        description="Fractional total-variation denoising laboratory (exact discrete solvers).",
    )
    p.add_argument("--version", action="version", version=f"fractv {__version__}")

    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, lam=True):
        sp.add_argument("--s", type=float, default=None, help="fractional order in (0,1); default 0.5")
        sp.add_argument("--trunc-radius", type=float, default=None, help="kernel truncation radius (default: window diameter)")
        sp.add_argument("--spacing", type=float, default=None, help="cell spacing of file inputs (default 1.0)")
        sp.add_argument("--config", default=None, help="key=value config file supplying flag defaults")
        sp.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
        if lam:
            sp.add_argument("--lambda", dest="lam", type=float, default=None, help="fidelity weight")

    sp = sub.add_parser("energy", help="evaluate perimeter / total variation / energy breakdowns")
    common(sp)
    sp.add_argument("input", help="field (.pgm/.csv) or set (.pbm)")
    sp.add_argument("datum", nargs="?", default=None, help="optional datum field or set for an energy breakdown")

    sp = sub.add_parser("geom", help="solve the geometric problem for a datum set")
    common(sp)
    sp.add_argument("--lambdas", default=None, help="START:STOP:STEP or comma list (alternative to --lambda)")
    sp.add_argument("--datum", required=True, help="datum set (.pbm)")
    sp.add_argument("--out-dir", default=None, help="directory for minimal/maximal masks")

    sp = sub.add_parser("denoise", help="layered exact solve of the denoising model")
    common(sp)
    sp.add_argument("--levels", type=int, default=None, help="quantization level budget (default 64)")
    sp.add_argument("--variant", choices=("minimal", "maximal"), default=None)
    sp.add_argument("--report", default=None, help="write the solve report JSON here")
    sp.add_argument("input", help="input field (.pgm/.csv)")
    sp.add_argument("output", help="output field (.pgm/.csv)")

    sp = sub.add_parser("cheeger", help="fractional Cheeger constant of a finite set")
    common(sp, lam=False)
    sp.add_argument("--tol", type=float, default=None, help="Dinkelbach stopping tolerance")
    sp.add_argument("--set-out", default=None, help="write the achieving subset as PBM")
    sp.add_argument("input", help="set file (.pbm)")

    sp = sub.add_parser("sweep", help="distance-to-datum table over a fidelity schedule")
    common(sp, lam=False)
    sp.add_argument(
        "--lambdas",
        default=None,
        help="START:STOP:STEP or comma list (default: 16 points in [0.25, 4] times "
        "the datum's ratio constant, or [0.1, 10] when that is unavailable)",
    )
    sp.add_argument("--datum", required=True, help="datum set (.pbm)")
    sp.add_argument("--out", default=None, help="CSV destination (default stdout)")

    sp = sub.add_parser("verify", help="run the theorem verification suite")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--s-values", default=None, help="comma list of fractional orders")
    sp.add_argument("--out-dir", default=None, help="report directory")
    sp.add_argument("--config", default=None)
    sp.add_argument("--json", action="store_true")
    return p


def _cmd_energy(args, cfg) -> int:
    s = _setting(args, cfg, "s", float, 0.5)
    spacing = _setting(args, cfg, "spacing", float, 1.0)
    rho = _setting(args, cfg, "trunc_radius", float, None)
    lam = _setting(args, cfg, "lam", float, None)
    first = _load_input(args.input, spacing)
    kern = build_kernel(first.domain, s, rho)
    payload: dict = {"s": s, "trunc_radius": kern.trunc_radius, "spacing": spacing}
    if args.datum is None:
        if isinstance(first, PixelSet):
            payload["perimeter"] = frac_perimeter(first, kern)
        else:
            payload["total_variation"] = frac_total_variation(first, kern)
    else:
        if lam is None:
            raise ValueError("--lambda is required for an energy breakdown")
        second = _load_input(args.datum, spacing)
        if isinstance(first, PixelSet) != isinstance(second, PixelSet):
            raise ValueError("input and datum must both be sets or both be fields")
        if isinstance(first, PixelSet):
            payload.update(geometric_energy(first, second, lam, kern).to_dict())
        else:
            payload.update(functional_energy(first, second, lam, kern).to_dict())
    _emit(payload, args.json)
    return 0


def _cmd_geom(args, cfg) -> int:
    s = _setting(args, cfg, "s", float, 0.5)
    spacing = _setting(args, cfg, "spacing", float, 1.0)
    rho = _setting(args, cfg, "trunc_radius", float, None)
    datum = read_pbm(args.datum, spacing)
    kern = build_kernel(datum.domain, s, rho)
    if args.lambdas:
        lams = _parse_lambdas(args.lambdas)
    else:
        lam = _setting(args, cfg, "lam", float, None)
        if lam is None:
            raise ValueError("provide --lambda or --lambdas")
        lams = [lam]
    out_dir = _out_dir(args, cfg)
    results = []
    for lam in lams:
        sol = solve_cut(build_cut_problem(datum, lam, kern))
        row = {"lambda": lam, **sol.to_dict()}
        if out_dir:
            d = Path(out_dir)
            d.mkdir(parents=True, exist_ok=True)
            write_pbm(sol.minimal_set, d / f"minimal_lam{lam:g}.pbm")
            write_pbm(sol.maximal_set, d / f"maximal_lam{lam:g}.pbm")
            row["masks_dir"] = str(d)
        results.append(row)
    _emit({"s": s, "solutions": results}, args.json)
    return 0


def _cmd_denoise(args, cfg) -> int:
    s = _setting(args, cfg, "s", float, 0.5)
    spacing = _setting(args, cfg, "spacing", float, 1.0)
    rho = _setting(args, cfg, "trunc_radius", float, None)
    lam = _setting(args, cfg, "lam", float, None)
    if lam is None:
        raise ValueError("--lambda is required")
    levels = _setting(args, cfg, "levels", int, 64)
    variant = _setting(args, cfg, "variant", str, "minimal")
    f = read_field(args.input, spacing)
    kern = build_kernel(f.domain, s, rho)
    sol = solve_functional(f, lam, kern, n_levels=levels, variant=variant)
    write_field(sol.u, args.output)
    report = sol.report.to_dict()
    report["output"] = str(args.output)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(_jsonify(report), fh, indent=2)
    _emit(report if args.json else {"output": args.output, "energy": sol.report.energy.total}, args.json)
    return 0


def _cmd_cheeger(args, cfg) -> int:
    s = _setting(args, cfg, "s", float, 0.5)
    spacing = _setting(args, cfg, "spacing", float, 1.0)
    rho = _setting(args, cfg, "trunc_radius", float, None)
    tol = _setting(args, cfg, "tol", float, 1e-12)
    e = read_pbm(args.input, spacing)
    kern = build_kernel(e.domain, s, rho)
    result = cheeger(e, kern, tol)
    if args.set_out:
        write_pbm(result.cheeger_set, args.set_out)
    _emit({"s": s, **result.to_dict()}, args.json)
    return 0


def _cmd_sweep(args, cfg) -> int:
    s = _setting(args, cfg, "s", float, 0.5)
    spacing = _setting(args, cfg, "spacing", float, 1.0)
    rho = _setting(args, cfg, "trunc_radius", float, None)
    datum = read_pbm(args.datum, spacing)
    kern = build_kernel(datum.domain, s, rho)
    schedule = _setting(args, cfg, "lambdas", str, None)
    if schedule:
        lams = _parse_lambdas(schedule)
    elif not datum.background and datum.cell_count > 0:
        # bracket all three regimes around the datum's ratio constant
        h_s = cheeger(datum, kern).constant
        lams = list(np.linspace(0.25 * h_s, 4.0 * h_s, 16))
    else:
        lams = list(np.linspace(0.1, 10.0, 16))
    sweep = parametric_sweep(datum, lams, kern)
    lines = ["lambda,d_min,d_max,tie,optimal_value"]
    for pt in sweep.points:
        lines.append(f"{pt.lam:.12g},{pt.d_min:.12g},{pt.d_max:.12g},{int(pt.tie)},{pt.optimal_value:.12g}")
    body = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(body)
    else:
        sys.stdout.write(body)
    if args.json:
        _emit(
            {
                "jump_lambdas": sweep.jump_lambdas,
                "jump_brackets": sweep.jump_brackets,
                "monotonicity_violations": sweep.monotonicity_violations,
            },
            True,
        )
    return 0 if not sweep.monotonicity_violations else 1


def _cmd_verify(args, cfg) -> int:
    seed = _setting(args, cfg, "seed", int, 7)
    s_values = _setting(args, cfg, "s_values", str, None)
    if isinstance(s_values, str):
        s_values = tuple(float(x) for x in s_values.split(",") if x.strip())
    vcfg = VerifyConfig(seed=seed, out_dir=_out_dir(args, cfg))
    if s_values:
        vcfg.s_values = s_values
    reports = run_suite(vcfg)
    all_pass = all(r.passed for r in reports)
    if args.json:
        _emit({"passed": all_pass, "reports": [r.to_dict() for r in reports]}, True)
    else:
        width = max(len(r.anchor) for r in reports)
        for r in reports:
            status = "pass" if r.passed else "FAIL"
            print(f"{r.anchor:<{width}}  {status}  instances={r.instances} worst={r.worst_residual:.2e} {r.runtime_s:.2f}s")
        print(f"suite: {'pass' if all_pass else 'FAIL'}")
    return 0 if all_pass else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg = _read_config(getattr(args, "config", None))
    handlers = {
        "energy": _cmd_energy,
        "geom": _cmd_geom,
        "denoise": _cmd_denoise,
        "cheeger": _cmd_cheeger,
        "sweep": _cmd_sweep,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args, cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
