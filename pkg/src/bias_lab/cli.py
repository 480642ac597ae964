"""Command line entry point ``bias-lab``.

Subcommands::

    bias-lab run config.json [--set train.eta=0.001 ...]
    bias-lab gen genspec.json -o data.csv
    bias-lab solve {l2,l1f} data.csv
    bias-lab check-lemmas --dims 2,4,8 --depths 1,2,3,4 --seeds 50

Exit status: 0 when every assertion passes, 1 when an assertion fails and
2 for invalid configuration or a runtime error. Failures are reported as
JSON on stderr.
"""
import argparse
import json
import sys
import time
from pathlib import Path

from . import certify, datagen, experiments
from .dataset import Dataset
from .errors import BiasLabError, ConfigError

EXIT_OK, EXIT_FAILED, EXIT_ERROR = 0, 1, 2


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _apply_overrides(raw, pairs):
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like dotted.path=value, got {pair!r}")
        experiments.set_dotted(raw, key, _parse_value(value))
    return raw


def _fail(kind, message):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _report(summary):
    for a in summary["assertions"]:
        mark = "PASS" if a["passed"] else "FAIL"
        detail = ""
        if "value" in a:
            detail = f" {a['value']!r} {a['op']} {a['threshold']!r}"
        print(f"{mark} {a['name']}{detail}")
    if summary["error"]:
        _fail(summary["error"]["type"], summary["error"]["message"])
    return EXIT_OK if summary["passed"] else EXIT_FAILED


def cmd_run(args):
    raw = _apply_overrides(_load_json(args.config), args.set)
    if args.output_dir:
        raw["output_dir"] = args.output_dir
    cfg = experiments.ExperimentConfig.from_dict(raw)
    start = time.perf_counter()
    summary = experiments.run(cfg)
    print(f"{cfg.experiment.value}: {time.perf_counter() - start:.1f}s, "
          f"summary in {Path(cfg.output_dir) / 'summary.json'}", file=sys.stderr)
    return _report(summary)


def cmd_gen(args):
    raw = _apply_overrides(_load_json(args.spec), args.set)
    spec = datagen.GenSpec.from_dict(raw)
    data = datagen.generate(spec)
    sidecar = datagen.save(data, spec, args.output)
    print(f"wrote {args.output} and {sidecar}", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args):
    data = Dataset.from_csv(args.data)
    if args.solver == "l2":
        rep = certify.l2_max_margin(data, tol=args.tol)
    else:
        rep = certify.l1_fourier_max_margin(data, tol=args.tol)
    out = rep.to_dict()
    if args.solver == "l1f" and rep.optimal:
        cert = certify.kkt_residual_bridge(rep.solution, data, 1.0)
        out["kkt"] = {"equality_residual": cert.equality_residual,
                      "inequality_violation": cert.inequality_violation}
    print(experiments.dumps(out), end="")
    return EXIT_OK if rep.optimal else EXIT_FAILED


def cmd_check_lemmas(args):
    cfg = experiments.ExperimentConfig(
        experiment="lemma-checks", dims=args.dims, depths=args.depths, seeds=args.seeds,
        gd_steps=args.gd_steps, output_dir=args.output_dir)
    return _report(experiments.run(cfg))


def build_parser():
    parser = argparse.ArgumentParser(prog="bias-lab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a named experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--set", action="append", metavar="PATH=VALUE",
                   help="override a config field by dotted path (repeatable)")
    p.add_argument("--output-dir", help="shorthand for --set output_dir=...")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen", help="generate a dataset from a JSON GenSpec")
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--set", action="append", metavar="PATH=VALUE")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="max-margin reference solvers")
    p.add_argument("solver", choices=["l2", "l1f"])
    p.add_argument("data")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check-lemmas", help="algebraic identity checks")
    p.add_argument("--dims", type=_int_list, default=[2, 4, 8])
    p.add_argument("--depths", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--gd-steps", type=int, default=20)
    p.add_argument("--output-dir", default="lemma-checks")
    p.set_defaults(func=cmd_check_lemmas)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _fail("ConfigError", str(exc))
    except BiasLabError as exc:
        _fail(type(exc).__name__, str(exc))
    except (OSError, ValueError) as exc:
        _fail(type(exc).__name__, str(exc))
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
