"""Command-line interface: split, plan, augment, synth, eval, aggregate.

Exit codes: 0 success, 1 usage or configuration error, 2 data error. Every
artifact embeds the tool version and enough configuration (including the
seed) to re-run its stage; identical flags and inputs produce bit-identical
outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .augment import (
    AugmentPlan,
    AugmentPolicy,
    build_plan,
    enumerate_attribute_combos,
    load_landmark_template,
    load_landmarks,
    run_align,
    run_basic,
    run_combined,
    save_attribute_plan,
)
from .errors import DataError
from .gallery import UNBOUNDED
from .io import (
    SyntheticSpec,
    gen_synthetic,
    load_embeddings_auto,
    read_report,
    report_to_dict,
    write_embeddings,
    write_embeddings_binary,
    write_report,
)
from .protocol import RunConfig, StreamItem, aggregate_runs, run_protocol
from .splits import load_manifest, split_both, split_unique

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

SPLIT_SUMMARY_FORMAT = "split-summary/v1"
AUGMENT_REPORT_FORMAT = "augment-report/v1"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; this tool reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tool_echo() -> dict:
    return {"tool": "faceid-bench", "tool_version": __version__}


def _window_arg(text: str):
    if text.lower() == "unbounded":
        return UNBOUNDED
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'unbounded', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("window must be >= 1 (or 'unbounded')")
    return value


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_ids(ids, path: Path, header: str) -> None:
    body = "".join(f"{i}\n" for i in sorted(ids))
    path.write_text(f"# {header}\n{body}", encoding="utf-8")


def _read_ids(path: Path) -> list[str]:
    ids = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.append(line)
    return ids


# -- subcommands -------------------------------------------------------------------


def cmd_split(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.kind == "unique":
        result = split_unique(manifest, args.seed, args.ratio)
    else:
        result = split_both(manifest, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stage = f"faceid-bench {__version__} split kind={result.kind} seed={result.seed} ratio={args.ratio}"
    _write_ids(result.train, out / "train_ids.txt", f"{stage} side=train")
    _write_ids(result.test, out / "test_ids.txt", f"{stage} side=test")
    per_identity = {
        label: {
            "train": sum(1 for i in ids if i in result.train),
            "test": sum(1 for i in ids if i in result.test),
        }
        for label, ids in manifest.by_label().items()
    }
    summary = {
        "format": SPLIT_SUMMARY_FORMAT,
        **_tool_echo(),
        "kind": result.kind,
        "seed": result.seed,
        "ratio_target": args.ratio if args.kind == "unique" else None,
        "counts": {
            "total": len(manifest),
            "train": len(result.train),
            "test": len(result.test),
            "train_identities": sum(1 for c in per_identity.values() if c["train"]),
            "test_identities": sum(1 for c in per_identity.values() if c["test"]),
        },
        "test_fraction": result.test_fraction,
        "identities": per_identity,
    }
    _write_json(summary, out / "summary.json")
    print(
        f"{result.kind} split: {len(result.train)} train / {len(result.test)} test "
        f"(fraction {result.test_fraction:.4f}) -> {out}"
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    out = Path(args.out)
    if args.kind == "attrs":
        combos = enumerate_attribute_combos(args.seed)
        save_attribute_plan(combos, out, seed=args.seed, extra=_tool_echo())
        print(f"attribute plan: {len(combos)} combinations -> {out}")
        return EXIT_OK
    policy = None
    if args.policy:
        policy = AugmentPolicy.from_dict(json.loads(Path(args.policy).read_text(encoding="utf-8")))
    plan = build_plan(args.seed, n_chains=args.chains, policy=policy)
    plan.save(out, extra=_tool_echo())
    print(f"augmentation plan: {plan.n_chains} chains per image -> {out}")
    return EXIT_OK


def cmd_augment(args) -> int:
    out = Path(args.out)
    if args.mode == "align":
        if not args.landmarks or not args.template:
            print("error: --mode align requires --landmarks and --template", file=sys.stderr)
            return EXIT_USAGE
        landmarks = load_landmarks(args.landmarks)
        template = load_landmark_template(args.template)
        report = run_align(args.src, landmarks, template, out, workers=args.workers)
        config = {"landmarks": str(args.landmarks), "template": str(args.template)}
    else:
        if not args.plan:
            print(f"error: --mode {args.mode} requires --plan", file=sys.stderr)
            return EXIT_USAGE
        plan = AugmentPlan.load(args.plan)
        runner = run_basic if args.mode == "basic" else run_combined
        report = runner(args.src, plan, out, workers=args.workers)
        config = plan.to_dict()
    payload = {"format": AUGMENT_REPORT_FORMAT, **_tool_echo(), "config": config, **report.to_dict()}
    _write_json(payload, out / "report.json")
    print(
        f"{report.mode}: {report.outputs} outputs from {report.sources} sources "
        f"({len(report.failures)} failures, {len(report.missing)} missing) -> {out}"
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        identities=args.identities,
        images_per_identity=args.per,
        dim=args.dim,
        within_noise=args.noise,
        seed=args.seed,
    )
    records = gen_synthetic(spec)
    out = Path(args.out)
    if args.binary:
        write_embeddings_binary(records, out)
    else:
        header = {
            **_tool_echo(),
            "identities": spec.identities,
            "images_per_identity": args.per,
            "dim": spec.dim,
            "within_noise": spec.within_noise,
            "seed": spec.seed,
        }
        write_embeddings(records, out, header=header)
    print(f"synthetic embeddings: {len(records)} records -> {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    records = load_embeddings_auto(args.embeddings)
    by_id = {rec.id: rec for rec in records}
    if args.test_ids:
        wanted = _read_ids(Path(args.test_ids))
        missing = [i for i in wanted if i not in by_id]
        if missing:
            raise DataError(
                f"{len(missing)} test id(s) have no embedding: {', '.join(missing[:20])}"
                + (" ..." if len(missing) > 20 else "")
            )
        selected = [by_id[i] for i in wanted]
    else:
        selected = records
    items = [StreamItem(id=rec.id, embedding=rec.vector, true_label=rec.label) for rec in selected]
    cfg = RunConfig(window=args.window, sigma=args.sigma, shuffle=args.shuffle, seed=args.seed, runs=args.runs)
    echo = {**cfg.echo(), **_tool_echo()}
    result = run_protocol(items, cfg, keep_logs=args.log, config_echo=echo)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, report in enumerate(result.per_run):
        write_report(report, out / f"run_{i:03d}.json")
    write_report(result.aggregate, out / "aggregate.json")
    summary = {
        "format": "eval-summary/v1",
        **_tool_echo(),
        "config": cfg.echo(),
        "seed": int(args.seed),
        "aggregate": report_to_dict(result.aggregate),
        "per_run": [report_to_dict(r) for r in result.per_run],
    }
    _write_json(summary, out / "summary.json")
    if args.log:
        for i, log in enumerate(result.logs):
            with (out / f"items_{i:03d}.jsonl").open("w", encoding="utf-8") as fp:
                meta = {
                    "format": "item-log/v1",
                    **_tool_echo(),
                    "config": cfg.echo(),
                    "run_seed": result.per_run[i].run_seed,
                }
                fp.write(json.dumps(meta, sort_keys=True) + "\n")
                for entry in log:
                    fp.write(
                        json.dumps(
                            {
                                "id": entry.id,
                                "outcome": entry.outcome.value,
                                "accepted": entry.accepted,
                                "predicted": entry.predicted,
                                "best_index": entry.best_index,
                                "best_score": entry.best_score,
                                "matched_threshold": entry.matched_threshold,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
    agg = result.aggregate

    def show(value):
        return "null" if value is None else f"{value:.4f}"

    print(
        f"eval: {len(items)} items, {cfg.runs} runs -> {out} | "
        f"ACC {show(agg.acc)} TAR {show(agg.tar)} TRR {show(agg.trr)} "
        f"FAR {show(agg.far)} FRR {show(agg.frr)} WAR {show(agg.war)}"
    )
    return EXIT_OK


def cmd_aggregate(args) -> int:
    reports = [read_report(p) for p in args.reports]
    aggregate = aggregate_runs(reports)
    write_report(aggregate, Path(args.out))
    print(f"aggregate of {len(reports)} reports -> {args.out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faceid-bench", description=__doc__)
    parser.add_argument("--version", action="version", version=f"faceid-bench {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("split", parents=[], help="produce a train/test split from a manifest", add_help=True)
    p.add_argument("--manifest", required=True, help="tab-separated image_id<TAB>label file")
    p.add_argument("--kind", choices=("unique", "both"), required=True)
    p.add_argument("--ratio", type=float, default=0.1, help="test image fraction (unique split)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("plan", help="write an augmentation or attribute plan file")
    p.add_argument("--kind", choices=("chains", "attrs"), default="chains")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=24, help="chains per image (chains plan)")
    p.add_argument("--policy", help="JSON file overriding the chain policy")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("augment", help="run a plan over a directory of images")
    p.add_argument("--mode", choices=("basic", "combined", "align"), default="basic")
    p.add_argument("--src", required=True, help="source image directory")
    p.add_argument("--plan", help="plan file (basic/combined modes)")
    p.add_argument("--landmarks", help="per-image landmark file (align mode)")
    p.add_argument("--template", help="template landmark file (align mode)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("synth", help="generate synthetic embeddings")
    p.add_argument("--identities", type=int, required=True)
    p.add_argument("--per", type=int, default=1, help="images per identity")
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--noise", type=float, default=0.0, help="within-identity noise std")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="write the packed binary format")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="run the online recognition protocol")
    p.add_argument("--embeddings", required=True, help="embedding file (text or packed)")
    p.add_argument("--test-ids", help="file of ids to evaluate (defaults to every record)")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--window", type=_window_arg, default=100, help="gallery window (int or 'unbounded')")
    p.add_argument("--sigma", type=float, default=1.0, help="threshold scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-shuffle", dest="shuffle", action="store_false", help="keep stream order fixed")
    p.add_argument("--log", action="store_true", help="also write per-item logs")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("aggregate", help="average several run reports")
    p.add_argument("--reports", nargs="+", required=True, help="per-run report files")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_aggregate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # bad flags (exit 1) or --help/--version (exit 0)
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"faceid-bench: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"faceid-bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
