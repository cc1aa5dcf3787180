"""Command-line interface: ``cmcsl {synth,validate,pseudolabel,run,report}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

from ._validation import DataError
from .dataset import ModalitySpec, SyntheticSpec, load_multimodal, make_synthetic, save_multimodal
from .preprocess import PreprocessKind
from .propagate import CrossModalSelfLabeling
from .protocol import CellError, ExperimentConfig, MethodKind, read_results, run_experiment, write_outputs

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("cmcsl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _preprocess(text):
    try:
        return PreprocessKind.parse(text).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _modality(text):
    try:
        return ModalitySpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _describe(dataset):
    counts = [int((dataset.labels == k).sum()) for k in range(dataset.n_classes)]
    mods = ", ".join(f"{v.name} (d={v.d})" for v in dataset.modalities)
    return (f"{dataset.name}: N={dataset.n_samples}, n_classes={dataset.n_classes}, "
            f"class counts={counts}, modalities: {mods}")


def cmd_synth(args):
    mods = tuple(args.mod) if args.mod else SyntheticSpec().modalities
    spec = SyntheticSpec(n_classes=args.classes, samples_per_class=args.per_class,
                         modalities=mods, seed=args.seed, name=args.name)
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dataset = make_synthetic(spec)
    manifest = save_multimodal(dataset, args.out, binary=args.binary)
    print(_describe(dataset))
    print(f"manifest: {manifest}")


def cmd_validate(args):
    dataset = load_multimodal(args.manifest)
    print(_describe(dataset))
    print("ok")


def _write_dump(path, dataset, labeling):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance", "y_true"] + [f"y_{n}" for n in dataset.modality_names]
                   + ["y_cm", "provenance"])
        tags = labeling.tags()
        for i in range(dataset.n_samples):
            w.writerow([i, int(dataset.labels[i])]
                       + [int(v) for v in labeling.raw_labels[:, i]]
                       + [int(labeling.labels[i]), tags[i]])


def cmd_pseudolabel(args):
    dataset = load_multimodal(args.manifest)
    labeler = CrossModalSelfLabeling(b_class=args.b_class, preprocess=args.preprocess,
                                     random_state=args.seed)
    labeler.fit(dataset.views, dataset.labels, n_classes=dataset.n_classes)
    lab = labeler.labeling_
    acc = float((lab.labels == dataset.labels).mean())
    print(f"instances: {dataset.n_samples}, centroids: {lab.prelabeled.size}")
    print(f"prelabeled fraction: {lab.prelabeled.size / dataset.n_samples:.6f}")
    print(f"agreed fraction: {lab.agreed_fraction:.6f}")
    print(f"resolved fraction: {lab.resolved_fraction:.6f}")
    print(f"pseudo-label accuracy: {acc:.6f}")
    if args.dump_pseudolabels:
        _write_dump(args.dump_pseudolabels, dataset, lab)
        print(f"wrote {args.dump_pseudolabels}")


def _build_config(args):
    if args.config:
        try:
            config = ExperimentConfig.from_json(args.config)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"config error: {exc}") from exc
    else:
        config = ExperimentConfig()
    overrides = {}
    if args.manifest:
        overrides["datasets"] = list(args.manifest)
    for name in ("classifier", "preprocess", "repeats", "alpha"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.b_class is not None:
        overrides["budgets"] = (args.b_class,)
    if args.budgets is not None:
        overrides["budgets"] = args.budgets
    if args.methods is not None:
        overrides["methods"] = args.methods
    if args.modalities is not None:
        overrides["modalities"] = [m for m in args.modalities.split(",") if m]
    try:
        merged = {f: getattr(config, f) for f in config.__dataclass_fields__}
        merged.update(overrides)
        config = ExperimentConfig(**merged)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not config.datasets:
        raise UsageError("no datasets: pass a config file or --manifest")
    return config


def cmd_run(args):
    config = _build_config(args)
    records = run_experiment(config, jobs=args.jobs, keep_going=args.keep_going)
    summary = write_outputs(records, args.out, config=config, alpha=config.alpha)
    n_bad = sum(not r.ok for r in records)
    print(f"{len(records)} records ({n_bad} flagged) written to {args.out}")
    for table in summary.rank_tables:
        ranks = ", ".join(f"{m}={r:.3f}" for m, r in zip(table.methods, table.ranks))
        print(f"{table.title}: {ranks}")


def cmd_report(args):
    records = read_results(args.results)
    if not records:
        raise DataError(f"{args.results}: no records")
    out = args.out or str(Path(args.results).parent)
    write_outputs(records, out, alpha=args.alpha)
    print(f"report written to {out}")


def build_parser():
    parser = _Parser(prog="cmcsl", description="Cross-modality clustering-based self-labeling experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic multimodal dataset")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--mod", type=_modality, action="append",
                   help="modality as name:d:separation[:std]; repeat per modality")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="synthetic")
    p.add_argument("--binary", action="store_true", help="write CMML binary feature files")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="check a manifest without running anything")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("pseudolabel", help="run self-labeling on a whole dataset")
    p.add_argument("manifest")
    p.add_argument("--b-class", type=_positive_int, default=1)
    p.add_argument("--preprocess", type=_preprocess, default="l2std")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-pseudolabels", "--out", dest="dump_pseudolabels",
                   help="CSV path for the per-instance diagnostic dump")
    p.set_defaults(func=cmd_pseudolabel)

    p = sub.add_parser("run", help="run the cross-validated comparison")
    p.add_argument("config", nargs="?", help="JSON experiment config")
    p.add_argument("--manifest", action="append", help="dataset manifest; repeatable")
    p.add_argument("--classifier", choices=["gnb", "lr", "cart"])
    p.add_argument("--preprocess", type=_preprocess)
    p.add_argument("--b-class", type=_positive_int, help="single budget")
    p.add_argument("--budgets", help="budget list, e.g. 1-20 or 1,3,5")
    p.add_argument("--methods", help=f"comma list from {','.join(m.value for m in MethodKind)}")
    p.add_argument("--modalities", help="comma list of modality names to evaluate")
    p.add_argument("--repeats", type=_positive_int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--keep-going", action="store_true", help="record failing cells instead of aborting")
    p.add_argument("--out", default="results", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="rebuild stats and summary from results.csv")
    p.add_argument("results")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="output directory (default: alongside results.csv)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"cmcsl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cmcsl: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CellError as exc:
        print(f"cmcsl: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"cmcsl: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
