"""Command-line entry point: ``igattack {synth,train,attack,campaign,sweep,report}``.

Exit codes: 0 success, 1 usage error, 2 data/model error, 3 campaign failure.
Every error line starts with a stable ``E-<KIND>:`` prefix.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .attacks import DEFAULTS, KINDS, AttackConfig, run_attack
from .dataio import (
    DataError,
    ModelFileError,
    TrainingError,
    load_csv,
    load_model,
    read_records,
    save_model,
    synth_blobs,
    train_mlp,
    train_test_split,
    write_csv,
    write_records,
)
from .evalbench import (
    Campaign,
    CampaignError,
    MetricsReport,
    attack_rows,
    campaign_record,
    curve_text,
    metrics_from_outcomes,
    report_to_table,
    select_pool,
    table_header,
)
from .kernels import BACKEND
from .optimnorm import ObjectiveConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAMPAIGN = 0, 1, 2, 3

log = logging.getLogger("igattack")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


def _defaults_epilog() -> str:
    lines = ["attack defaults (used when a flag is omitted):"]
    for kind in KINDS:
        d = DEFAULTS[kind]
        parts = [f"eps={d['eps']}", f"iters={d['iters']}"]
        if "points" in d:
            parts.append(f"points={d['points']}")
        if "objective" in d:
            o = d["objective"]
            parts.append(f"c={o.c} norm=l{o.norm} lambda={o.lam}")
        if kind in ("cw",):
            parts.append(f"kappa={d['kappa']}")
        if kind == "deepfool":
            parts.append(f"overshoot={d['overshoot']} deepfool_iters={d['max_deepfool_iters']}")
        lines.append(f"  {kind:9s} " + " ".join(parts))
    lines.append("  all: ig_steps=64 baseline=zeros; pgd step = 2.5*eps/iters, bim step = eps/iters")
    return "\n".join(lines)


def _add_attack_flags(p, fixed_kind: str | None = None):
    g = p.add_argument_group("attack parameters")
    if fixed_kind is None:
        g.add_argument("--attack", choices=KINDS, required=True)
    g.add_argument("--norm", choices=("l1", "l2"), help="distance term for ifpa/iua")
    if fixed_kind == "ifpa":
        g.add_argument("--points", type=_int_list, required=True,
                       help="comma-separated point budgets, e.g. 1,5,9")
    else:
        g.add_argument("--points", type=int, help="number of perturbed points (ifpa)")
    g.add_argument("--eps", type=float, help="Adam step (ifpa/iua/cw) or L-inf budget (fgsm/bim/pgd)")
    g.add_argument("--c", type=float, help="distance weight (ifpa/iua) or margin weight (cw)")
    g.add_argument("--lambda", dest="lam", type=float, help="soft-threshold scale for --norm l1")
    g.add_argument("--iters", type=int)
    g.add_argument("--ig-steps", type=int, help="Riemann steps for integrated gradients (default 64)")
    g.add_argument("--kappa", type=float, help="cw confidence margin")
    g.add_argument("--overshoot", type=float, help="deepfool overshoot")
    g.add_argument("--deepfool-iters", type=int)
    g.add_argument("--step-size", type=float, help="bim/pgd per-step size")
    g.add_argument("--no-random-start", action="store_true", help="pgd starts at x")
    g.add_argument("--seed", type=int, default=0)


def _attack_config(args, kind: str | None = None) -> AttackConfig:
    kind = kind or args.attack
    base = DEFAULTS[kind].get("objective", ObjectiveConfig())
    objective = ObjectiveConfig(
        c=args.c if args.c is not None else base.c,
        norm=int(args.norm[1]) if args.norm else base.norm,
        lam=args.lam if args.lam is not None else base.lam,
    )
    return AttackConfig.for_kind(
        kind,
        eps=args.eps,
        iters=args.iters,
        points=args.points[0] if isinstance(args.points, list) else args.points,
        objective=objective,
        ig_steps=args.ig_steps,
        kappa=args.kappa,
        overshoot=args.overshoot,
        max_deepfool_iters=args.deepfool_iters,
        step_size=args.step_size,
        random_start=False if args.no_random_start else None,
        seed=args.seed,
    )


def _file_id(path) -> str:
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
    return f"{Path(path).name}#sha256:{digest}"


def _load_dataset(args):
    return load_csv(args.data, args.schema)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="igattack",
        description="Integrated-gradient white-box attacks and baselines for feed-forward classifiers.",
        epilog=f"Set IGATTACK_WORKERS to parallelize campaign samples. Kernel backend: {BACKEND}.",
    )
    parser.add_argument("--version", action="version", version=f"igattack {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("synth", help="write a synthetic Gaussian-blobs dataset as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--n-samples", type=int, default=2000)
    p.add_argument("--features", type=int, default=20)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a leaky-ReLU MLP on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", help="schema sidecar (default: <data>.schema.json)")
    p.add_argument("--hidden", type=_int_list, default=[64, 64, 32], help="hidden widths, e.g. 64,64,32")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--slope", type=float, default=0.01, help="leaky-ReLU negative slope")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--encoding", choices=("decimal", "base64-f64le"), default="decimal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("attack", help="attack one dataset row", epilog=_defaults_epilog(),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--index", type=int, default=0, help="row to attack")
    _add_attack_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("campaign", help="attack many correctly classified rows and report metrics",
                       epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    _add_attack_flags(p)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--workers", type=int)
    p.add_argument("--append", action="store_true", help="append to --out instead of replacing it")
    p.add_argument("--timing", action="store_true", help="include wall-clock runtime in the record")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="ifpa campaigns over several point budgets",
                       epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    _add_attack_flags(p, fixed_kind="ifpa")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--workers", type=int)
    p.add_argument("--records", help="also write one campaign record per budget (JSON lines)")
    p.add_argument("--out", required=True, help="columnar curve data")

    p = sub.add_parser("report", help="render campaign records as table rows")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", help="write the table here instead of stdout")
    return parser


def _label(attack: dict) -> str:
    kind = attack["kind"].upper()
    if attack["kind"] in ("ifpa", "iua"):
        kind += f"-L{attack['objective']['norm']}"
    if attack["kind"] == "ifpa":
        kind += f"@{attack['points']}"
    return kind


def _campaign_outputs(model, dataset, cfg, args, model_id, dataset_id):
    camp = Campaign(cfg, args.samples, args.seed, model_id, dataset_id)
    rows = select_pool(model, dataset, camp.sample_limit, camp.seed)
    start = time.perf_counter()
    outcomes = attack_rows(model, dataset, rows, cfg, camp.seed, args.workers)
    report = metrics_from_outcomes(outcomes, time.perf_counter() - start)
    return camp, report, outcomes, rows


def _cmd_synth(args):
    ds = synth_blobs(args.seed, args.n_samples, args.features, args.classes, args.spread)
    sidecar = write_csv(ds, args.out)
    print(f"wrote {len(ds)} rows to {args.out} (schema {sidecar})")


def _cmd_train(args):
    ds = _load_dataset(args)
    train, test = train_test_split(ds, args.test_fraction, args.seed)
    result = train_mlp(train, list(args.hidden) + [ds.n_classes], args.epochs, args.lr, args.batch,
                       args.seed, slope=args.slope, test=test if len(test) else None)
    save_model(result.model, args.out, args.encoding)
    test_acc = "n/a" if result.test_accuracy is None else f"{100 * result.test_accuracy:.2f}%"
    print(f"train accuracy {100 * result.train_accuracy:.2f}%  test accuracy {test_acc}  -> {args.out}")


def _cmd_attack(args):
    model = load_model(args.model)
    ds = _load_dataset(args)
    if not 0 <= args.index < len(ds):
        raise UsageError(f"--index {args.index} outside [0, {len(ds)})")
    cfg = _attack_config(args)
    x, y = ds.features[args.index], int(ds.labels[args.index])
    outcome = run_attack(model, x, y, cfg)
    rec = {
        "kind": "attack",
        "model_id": _file_id(args.model),
        "dataset_id": _file_id(args.data),
        "index": args.index,
        "label": y,
        "x": [float(v) for v in x],
        "attack": cfg.to_record(),
        "outcome": outcome.to_record(),
    }
    write_records(args.out, [rec])
    status = "success" if outcome.success else "failure"
    print(f"{status}: class {y} -> {outcome.adv_class}  L0={outcome.l0:g} L1={outcome.l1:.4f} L2={outcome.l2:.4f}")


def _cmd_campaign(args):
    model = load_model(args.model)
    ds = _load_dataset(args)
    cfg = _attack_config(args)
    camp, report, outcomes, rows = _campaign_outputs(model, ds, cfg, args, _file_id(args.model), _file_id(args.data))
    rec = campaign_record(camp, report, outcomes, rows, ds, include_runtime=args.timing)
    write_records(args.out, [rec], append=args.append)
    print(table_header())
    print(report_to_table(report, _label(rec["attack"]))[0])


def _cmd_sweep(args):
    model = load_model(args.model)
    ds = _load_dataset(args)
    base = _attack_config(args, kind="ifpa")
    model_id, dataset_id = _file_id(args.model), _file_id(args.data)
    curve, records = [], []
    for points in args.points:
        cfg = replace(base, points=points)
        camp, report, outcomes, rows = _campaign_outputs(model, ds, cfg, args, model_id, dataset_id)
        curve.append((points, report))
        rec = campaign_record(camp, report, outcomes, rows, ds)
        rec["kind"] = "sweep"
        rec["points"] = points
        records.append(rec)
    Path(args.out).write_text(curve_text(curve), encoding="utf-8")
    if args.records:
        write_records(args.records, records)
    print(table_header())
    for points, report in curve:
        print(report_to_table(report, f"IFPA-L{base.objective.norm}@{points}")[0])


def _cmd_report(args):
    try:
        records = read_records(args.inp)
    except (ValueError, KeyError) as exc:
        raise DataError(f"{args.inp}: {exc}") from None
    lines = [table_header()]
    for rec in records:
        if "metrics" not in rec:
            continue
        report = MetricsReport.from_record(rec["metrics"])
        lines.append(report_to_table(report, _label(rec["attack"]))[0])
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "attack": _cmd_attack,
    "campaign": _cmd_campaign,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"E-USAGE: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFileError, TrainingError, FileNotFoundError, IsADirectoryError) as exc:
        kind = "MODEL" if isinstance(exc, ModelFileError) else "DATA"
        print(f"E-{kind}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CampaignError as exc:
        print(f"E-CAMPAIGN: {exc}", file=sys.stderr)
        return EXIT_CAMPAIGN
    except ValueError as exc:
        # invalid parameter combinations rejected by the config types
        print(f"E-USAGE: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())
