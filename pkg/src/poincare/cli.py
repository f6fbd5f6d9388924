"""Command-line front end.

Exit status: 0 on success, 1 on invalid input or configuration, 2 when a
numerical stage fails.
"""

import argparse
import logging
import sys
from pathlib import Path

from . import bounds, clt, selftest, spectral
from .config import RunConfig
from .errors import NumericalError, ValidationError
from .report import load_mixture, write_csv, write_json

log = logging.getLogger("poincare")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _config(args):
    return RunConfig.from_env(
        n_points=args.grid,
        width=args.width,
        levels=args.levels,
        degree=args.degree,
        out_dir=args.out,
        seed=args.seed,
    )


def _require_mixture(args):
    if not args.mixture:
        raise ValidationError("required for this subcommand", field="--mixture")
    return load_mixture(args.mixture)


def cmd_bound(args, cfg):
    m = _require_mixture(args)
    rep = bounds.bound_report(m, degree=cfg.degree, scan_points=cfg.scan_points, width=cfg.quad_width)
    value, ok = bounds.moment_tail_check(m, rep.chosen_upper)
    payload = rep.to_dict()
    payload["moment_tail_check"] = {"value": value, "pass": ok}
    path = write_json(Path(cfg.out_dir) / "bound.json", "bound", payload, cfg)
    print(f"thm13_ub={rep.thm13_ub:.10g} chosen_lower={rep.chosen_lower:.10g} ({rep.chosen_lower_source})")
    print(f"wrote {path}")


def cmd_spectrum(args, cfg):
    m = _require_mixture(args)
    res = spectral.solve_gap(spectral.assemble(m, cfg.n_points, cfg.width), rayleigh_degree=cfg.degree)
    payload = {
        "lambda1": res.lambda1,
        "lambda0": res.lambda0,
        "r_estimate": res.r_estimate,
        "residual_norm": res.residual_norm,
        "certified_rayleigh_lb": res.certified_rayleigh_lb,
        "grid": res.metadata(),
    }
    out = Path(cfg.out_dir)
    p1 = write_json(out / "spectrum.json", "spectrum", payload, cfg)
    p2 = write_csv(
        out / "eigenfunction.csv",
        "eigenfunction",
        ["x", "g", "density"],
        zip(res.x, res.eigenfunction, res.density),
        cfg,
    )
    print(f"lambda1={res.lambda1:.12g} r_estimate={res.r_estimate:.12g}")
    print(f"wrote {p1}\nwrote {p2}")


def cmd_bu_scan(args, cfg):
    m = _require_mixture(args)
    scan = bounds.bu_ratio_scan(m, n_points=cfg.scan_points, width=cfg.quad_width)
    path = write_csv(
        Path(cfg.out_dir) / "bu_scan.csv",
        "bu-scan",
        ["x", "tail_moment", "density", "ratio"],
        scan.curve(m),
        cfg,
    )
    print(f"sup={scan.sup:.12g} argmax={scan.argmax:.12g}")
    print(f"wrote {path}")


def cmd_clt(args, cfg):
    m = _require_mixture(args)
    trace = clt.run_doubling(m, cfg.levels, cfg)
    columns = ["k", "n", "r_estimate", "thm13_ub", "fisher", "kappa4", "rate_product", "dynsys_residual", "atom_count"]
    path = write_csv(
        Path(cfg.out_dir) / "clt_trace.csv",
        "clt",
        columns,
        ([row[c] for c in columns] for row in trace.rows()),
        cfg,
    )
    print(f"C={trace.C_used:.10g} levels={len(trace.levels)}")
    print(f"wrote {path}")
    if trace.error:
        raise NumericalError(trace.error, stage="clt")


def cmd_recursion(args, cfg):
    rt = clt.recursion_extremal(args.u1, args.steps)
    stride = max(1, args.stride)
    rows = (row for row in rt.rows() if row[0] % stride == 0 or row[2] is not None)
    path = write_csv(
        Path(cfg.out_dir) / "recursion.csv",
        "recursion",
        ["k", "u_k", "bound_4_over_2r", "bound_16_over_k"],
        rows,
        cfg,
    )
    print(f"pow2_ok={rt.pow2_ok} filled_ok={rt.filled_ok}")
    print(f"wrote {path}")
    if not (rt.pow2_ok and rt.filled_ok):
        raise NumericalError("recursion bound violated", stage="recursion")


def cmd_selftest(args, cfg):
    def show(chk):
        status = "PASS" if chk.passed else "FAIL"
        print(f"{status} {chk.module}: {chk.name}" + (f" ({chk.detail})" if chk.detail else ""))

    results = selftest.run(cfg.seed, show)
    failed = sum(not c.passed for c in results)
    print(f"{len(results) - failed} passed, {failed} failed")
    if failed:
        raise NumericalError(f"{failed} invariant checks failed", stage="selftest")


COMMANDS = {
    "bound": cmd_bound,
    "spectrum": cmd_spectrum,
    "bu-scan": cmd_bu_scan,
    "clt": cmd_clt,
    "recursion": cmd_recursion,
    "selftest": cmd_selftest,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mixture", metavar="PATH", help="mixture JSON file")
    common.add_argument("--grid", type=int, metavar="N", help="grid points (odd, >= 101)")
    common.add_argument("--width", type=float, metavar="W", help="window half-width in sqrt(tau) units")
    common.add_argument("--levels", type=int, metavar="K", help="doubling levels for clt")
    common.add_argument("--degree", type=int, metavar="D", help="polynomial degree for Rayleigh bounds")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, metavar="S", help="seed for property runs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="poincare", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bound", parents=[common], help="write the bound report (bound.json)")
    sub.add_parser("spectrum", parents=[common], help="spectral gap (spectrum.json, eigenfunction.csv)")
    sub.add_parser("bu-scan", parents=[common], help="tail-ratio curve (bu_scan.csv)")
    sub.add_parser("clt", parents=[common], help="doubling experiment (clt_trace.csv)")
    rec = sub.add_parser("recursion", parents=[common], help="extremal recursion (recursion.csv)")
    rec.add_argument("--u1", type=float, default=1.0)
    rec.add_argument("--steps", type=int, default=2**20)
    rec.add_argument("--stride", type=int, default=1024, help="keep every S-th row (powers of two always kept)")
    sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        stage = exc.stage or args.command
        print(f"numerical failure in {stage}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
