"""
Command-line interface.

    eemd-haven decompose --input panel.csv --column BP --ensemble 100 \\
        --noise-std 0.2 --seed 42 --out run1/
    eemd-haven features  --decomposition run1/BP.csv --out run1/
    eemd-haven regress   --decompositions run1/ --dependent SPI \\
        --regressors BP,gold,silver,WTI --lag-dependent 1 --alpha 0.10 --out run1/
    eemd-haven hilbert   --decomposition run1/BP.csv --out run1/
    eemd-haven plotdata  --decomposition run1/BP.csv --out run1/
    eemd-haven pipeline  --config run.cfg

Exit status: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""

import argparse
import logging
import os
import sys
import traceback

from .eemd import DEFAULT_SEED, EemdConfig
from .emd import BOUNDARY_POLICIES, SiftConfig
from .errors import EemdHavenError, NumericalError, ValidationError
from .io import write_hilbert, write_plotdata
from .pipeline import (apply_transforms, decompose_panel, features_for, load_decompositions,
                       load_panel, load_run_config, regress_panel, run_pipeline)
from .regression import TAXONOMIES, RegressionSpec

logger = logging.getLogger("eemd_haven")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _columns(values):
    out = []
    for value in values or []:
        out += [v.strip() for v in value.split(",") if v.strip()]
    return out


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=None,
                        help="random seed for EEMD noise (default: {0})".format(DEFAULT_SEED))
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return common


def _add_decomposition_flags(p):
    p.add_argument("--method", choices=["eemd", "emd"], default="eemd")
    p.add_argument("--ensemble", type=int, default=100, help="ensemble size Ne")
    p.add_argument("--noise-std", type=float, default=0.2,
                   help="noise amplitude as a fraction of the series' std")
    p.add_argument("--sd-threshold", type=float, default=0.2)
    p.add_argument("--max-sift-iters", type=int, default=100)
    p.add_argument("--max-imfs", type=int, default=None, help="default: floor(log2 N) - 1")
    p.add_argument("--boundary", choices=BOUNDARY_POLICIES, default="mirror")
    p.add_argument("--transform", choices=["levels", "log"], default="levels")
    p.add_argument("--jobs", type=int, default=1, help="threads for ensemble trials")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="eemd-haven", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="EMD/EEMD of CSV columns")
    p.add_argument("--input", required=True, action="append", help="CSV file (repeatable)")
    p.add_argument("--column", required=True, action="append",
                   help="value column, repeatable or comma separated")
    _add_decomposition_flags(p)

    p = sub.add_parser("features", parents=[common], help="per-IMF feature table")
    p.add_argument("--decomposition", required=True, action="append",
                   help="decomposition CSV (repeatable)")
    p.add_argument("--horizon-mode", choices=["index", "period"], default="index")

    p = sub.add_parser("regress", parents=[common], help="per-scale regression report")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--decompositions", help="directory holding <name>.csv decompositions")
    src.add_argument("--input", action="append", help="CSV file(s) to decompose first")
    p.add_argument("--dependent", required=True)
    p.add_argument("--regressors", required=True, help="comma separated")
    p.add_argument("--lag-dependent", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.10)
    p.add_argument("--robust-se", action="store_true", help="HC1 standard errors")
    p.add_argument("--taxonomy", choices=sorted(TAXONOMIES), default="default")
    _add_decomposition_flags(p)

    p = sub.add_parser("hilbert", parents=[common], help="instantaneous amplitude/frequency")
    p.add_argument("--decomposition", required=True, action="append")

    p = sub.add_parser("plotdata", parents=[common], help="plot-ready sifting/component data")
    p.add_argument("--decomposition", required=True, action="append")

    p = sub.add_parser("pipeline", parents=[common], help="run a full configured analysis")
    p.add_argument("--config", required=True)
    return parser


def _eemd_config(args):
    sift = SiftConfig(args.sd_threshold, args.max_sift_iters, args.max_imfs, args.boundary)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    return EemdConfig(args.noise_std, args.ensemble, seed, sift)


def _decompose_inputs(args, columns, out_dir):
    config = _eemd_config(args)
    panel = load_panel(args.input, columns)
    panel = apply_transforms(panel, scale=args.transform)
    extra = {"transform": args.transform, "seed": config.seed}
    return decompose_panel(panel, out_dir, args.method, config, args.jobs, extra)


def cmd_decompose(args):
    _, written = _decompose_inputs(args, _columns(args.column), args.out)
    for path in written:
        print(path)


def cmd_features(args):
    from .io import read_decomposition
    for path in args.decomposition:
        dec, _ = read_decomposition(path)
        for written in features_for(dec, args.out, args.horizon_mode):
            print(written)


def cmd_regress(args):
    spec = RegressionSpec(args.dependent, tuple(_columns([args.regressors])),
                          args.lag_dependent, args.alpha, args.robust_se, args.taxonomy)
    names = [spec.dependent] + list(spec.regressors)
    if args.input:
        decs, _ = _decompose_inputs(args, names, os.path.join(args.out, "decompositions"))
    else:
        decs, metas = load_decompositions(args.decompositions, names)
        stored = {name: meta.get("transform", "levels") for name, meta in metas.items()}
        mismatched = sorted(n for n, t in stored.items() if t != args.transform)
        if mismatched:
            raise ValidationError(
                "--transform {0} does not match stored decompositions ({1}); "
                "re-run decompose or pass --input".format(
                    args.transform, ", ".join("{0}={1}".format(n, stored[n]) for n in mismatched)))
    result, written = regress_panel(decs, spec, args.out, {"transform": args.transform})
    for j, err in sorted(result.errors.items()):
        logger.warning("IMF%d: %s", j, err)
    for path in written:
        print(path)


def cmd_hilbert(args):
    from .io import read_decomposition
    os.makedirs(args.out, exist_ok=True)
    for path in args.decomposition:
        dec, _ = read_decomposition(path)
        print(write_hilbert(os.path.join(args.out, dec.name + "_hilbert.csv"), dec))


def cmd_plotdata(args):
    from .io import read_decomposition
    os.makedirs(args.out, exist_ok=True)
    for path in args.decomposition:
        dec, _ = read_decomposition(path)
        for written in write_plotdata(args.out, dec, dec.name):
            print(written)


def cmd_pipeline(args):
    cfg = load_run_config(args.config)
    if args.out != ".":
        cfg.out_dir = args.out
    if args.seed is not None:
        from dataclasses import replace
        cfg.eemd = replace(cfg.eemd, seed=args.seed)
        cfg.seed_defaulted = False
    manifest = run_pipeline(cfg)
    print(os.path.join(cfg.out_dir, "manifest.json"))
    return manifest


COMMANDS = {
    "decompose": cmd_decompose,
    "features": cmd_features,
    "regress": cmd_regress,
    "hilbert": cmd_hilbert,
    "plotdata": cmd_plotdata,
    "pipeline": cmd_pipeline,
}


def _failing_module(exc):
    package_dir = os.path.dirname(os.path.abspath(__file__))
    module = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        if os.path.dirname(os.path.abspath(frame.filename)) == package_dir:
            module = os.path.splitext(os.path.basename(frame.filename))[0].lstrip("_")
    return module


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ValidationError as exc:
        print("eemd-haven {0}: error in {1}: {2}".format(
            args.command, _failing_module(exc), exc), file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, EemdHavenError) as exc:
        print("eemd-haven {0}: numerical failure in {1}: {2}".format(
            args.command, _failing_module(exc), exc), file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print("eemd-haven {0}: {1}".format(args.command, exc), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
