"""Command line: ``aenmf {run,gen,metrics,solve}``.

Exit codes: 0 success, 2 usage, 3 parse, 4 config, 5 solver, 6 I/O, 1 other.
Progress goes to standard error; with ``--out -`` data goes to standard output.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .admm import fit
from .data import format_matrix, load_labels, save_labels, save_matrix
from .errors import AenmfError
from .metrics import evaluate
from .synth import generate

EXIT_CODES = {"parse": 3, "config": 4, "contract": 4, "solver": 5, "io": 6}

log = logging.getLogger("aenmf")


def _apply_overrides(config, args):
    if getattr(args, "seed", None) is not None:
        config.base_seed = args.seed
    if getattr(args, "runs", None) is not None:
        config.n_runs = args.runs
    return config.validate()


def cmd_run(args):
    config = _apply_overrides(pipeline.load_config(args.config), args)
    report = pipeline.run_experiment(config)
    for path in pipeline.emit_report(report, args.out):
        log.info("wrote %s", path)
    if args.out != "-" and not args.quiet:
        sys.stderr.write(pipeline.summary_csv(report))
    return 0


def cmd_gen(args):
    config = _apply_overrides(pipeline.load_config(args.config), args)
    if config.synth is None:
        raise AenmfError("gen needs a config with a 'synth' section")
    spec = config.synth if args.seed is None else replace(config.synth, seed=args.seed)
    mods, truth = generate(spec)
    if args.out == "-":
        for m in mods:
            sys.stdout.write(f"# {m.name}\n" + format_matrix(m.X))
        sys.stdout.write("# labels\n" + "".join(f"{int(t)}\n" for t in truth))
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for m in mods:
        save_matrix(out / f"{m.name}.csv", m.X)
        paths.append(f"{m.name}.csv")
    save_labels(out / "labels.txt", truth)
    # a ready-to-run config for the generated files
    data_cfg = {k: v for k, v in config.to_dict().items() if k not in ("synth", "resample_synth")}
    data_cfg["data"] = {"modalities": paths, "labels": "labels.txt", "orientation": "samples-as-rows"}
    (out / "config.json").write_text(json.dumps(data_cfg, indent=2, sort_keys=True) + "\n")
    log.info("wrote %d modalities and labels to %s", len(mods), out)
    return 0


def cmd_metrics(args):
    report = evaluate(load_labels(args.truth), load_labels(args.pred))
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "metrics.json").write_text(text)
    return 0


def cmd_solve(args):
    config = _apply_overrides(pipeline.load_config(args.config), args)
    mods, _ = pipeline.load_dataset(config)
    Hstar, traces, _ = fit(mods, config.layer_sizes, config.admm_config(), seed=config.base_seed,
                           k_nn=config.k_nn, weighting=config.weighting, sigma=config.sigma,
                           pretrain_iters=config.pretrain_iters, pretrain_tol=config.pretrain_tol)
    if args.out == "-":
        sys.stdout.write(format_matrix(Hstar))
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(out / "hstar.csv", Hstar)
    (out / "trace.csv").write_text(pipeline.trace_csv([t.as_dict() for t in traces]))
    log.info("wrote %s and %s", out / "hstar.csv", out / "trace.csv")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="aenmf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--out", default="-", help="output directory, or - for standard output")
        p.add_argument("--seed", type=int, help="override base_seed")
        p.add_argument("--runs", type=int, help="override n_runs")
        p.add_argument("--quiet", action="store_true", help="only report errors")
        return p

    common(sub.add_parser("run", help="run an experiment and write its report")).set_defaults(func=cmd_run)
    common(sub.add_parser("gen", help="write a synthetic dataset to files")).set_defaults(func=cmd_gen)
    p = common(sub.add_parser("metrics", help="score predicted labels against truth"), config=False)
    p.add_argument("truth", help="label file, one integer per line")
    p.add_argument("pred", help="predicted label file")
    p.set_defaults(func=cmd_metrics)
    common(sub.add_parser("solve", help="fit only and write the consensus representation")).set_defaults(
        func=cmd_solve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except AenmfError as exc:
        log.error("%s", exc)
        return EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_CODES["io"]


if __name__ == "__main__":
    sys.exit(main())
