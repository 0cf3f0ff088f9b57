"""Command-line interface.

Verbs:
    run           train + evaluate one configuration
    grid          loss-weight grid search over (alpha, gamma, lambda)
    ablate        re-run with edge perturbation or feature masking disabled
    sweep-epochs  evaluate checkpoints across an epoch schedule
    analyze       homophily / feature-correlation report for a trained model
    plot          accuracy-fairness trade-off scatter from report.json files
    validate-data check a dataset directory against its manifest
    make-data     materialize a stand-in dataset to CSV

Shared flags (--dataset, --seed, --epochs, ...) can also be preloaded from a
JSON config file via --config; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import experiments, synthetic
from .data import load_dataset_dir
from .trainer import read_history


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="dataset name (nba, citeseer, ...)")
    p.add_argument("--task", choices=["node", "link"], help="override the dataset's default task")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes where supported")
    p.add_argument("--no-ep", action="store_true", help="disable edge perturbation")
    p.add_argument("--no-fm", action="store_true", help="disable feature masking")
    p.add_argument("--batch-size", type=int, help="train on a node minibatch of this size")
    p.add_argument("--out", default="runs", help="output directory")
    p.add_argument("--data-root", help="directory holding <dataset>/ CSV folders")
    p.add_argument("--config", help="JSON file with defaults for these flags")
    p.add_argument("--repeats", type=int, help="classifier evaluation repeats")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphair",
                                     description="fair graph representation learning via "
                                                 "automated augmentation")
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb, desc in [
        ("run", "train and evaluate one configuration"),
        ("grid", "grid search over loss weights"),
        ("ablate", "run with one augmentation component disabled"),
        ("sweep-epochs", "evaluate checkpoints across epochs"),
        ("analyze", "homophily / correlation analysis of a trained model"),
    ]:
        p = sub.add_parser(verb, help=desc)
        _add_common(p)
        if verb == "ablate":
            p.add_argument("--which", choices=["ep", "fm", "both"], default="both",
                           help="component(s) to knock out")
        if verb == "sweep-epochs":
            p.add_argument("--at", type=int, nargs="+", required=True,
                           help="epoch checkpoints to evaluate, e.g. --at 100 500 1000")
        if verb == "analyze":
            p.add_argument("--checkpoint", help="trained checkpoint (.npz); trains fresh if omitted")

    p = sub.add_parser("plot", help="trade-off scatter from report.json files")
    p.add_argument("reports", nargs="+", help="report.json paths")
    p.add_argument("--out", default="tradeoff", help="output path prefix")

    p = sub.add_parser("validate-data", help="check a dataset directory against its manifest")
    p.add_argument("directory")

    p = sub.add_parser("make-data", help="materialize a stand-in dataset as CSV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data", help="root directory; files go in <out>/<dataset>/")

    return parser


def _load_config_file(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _experiment_config(args) -> experiments.ExperimentConfig:
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    dataset = args.dataset or file_values.get("dataset")
    if not dataset:
        raise SystemExit("--dataset is required (flag or config file)")

    cfg = experiments.default_config(
        dataset,
        seed=args.seed if args.seed is not None else file_values.get("seed", 0),
        epochs=args.epochs or file_values.get("epochs"),
        out_dir=args.out if args.out != "runs" else file_values.get("out", args.out),
    )
    if file_values.get("task"):
        cfg.task = file_values["task"]
    if file_values.get("loss_weights"):
        from .losses import LossWeights
        cfg.train = replace(cfg.train,
                            loss_weights=LossWeights.from_dict(file_values["loss_weights"]))
    if args.task:
        cfg.task = args.task
    cfg.train = replace(cfg.train, ablate_ep=args.no_ep, ablate_fm=args.no_fm)
    if args.batch_size:
        cfg.minibatch_nodes = args.batch_size
    if args.data_root or file_values.get("data_root"):
        cfg.data_root = args.data_root or file_values.get("data_root")
    if args.repeats or file_values.get("repeats"):
        cfg.repeats = args.repeats or file_values.get("repeats")
    cfg.jobs = args.jobs
    return cfg


def _print_report(tag: str, report) -> None:
    auc = "" if report.auc is None else f" auc={report.auc:.2f}"
    print(f"{tag}: acc={report.acc:.2f}{auc} dp={report.dp:.2f} eo={report.eo:.2f}"
          f" (±acc {report.acc_std:.2f}, n={report.repeats})")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.verb == "make-data":
        directory = synthetic.materialize(args.dataset, args.out, seed=args.seed)
        print(f"wrote {directory}")
        return 0

    if args.verb == "validate-data":
        graph = load_dataset_dir(args.directory)
        print(f"ok: {graph.n_nodes} nodes, {graph.n_edges} edges, "
              f"{graph.n_features} features, |S|={graph.n_sensitive}")
        return 0

    if args.verb == "plot":
        reports = []
        labels = []
        for path in args.reports:
            with open(path) as fh:
                payload = json.load(fh)
            from .evaluation import MetricsReport
            rep = MetricsReport(**payload["report"])
            if "subgroup_report" in payload:
                reports.append((rep, MetricsReport(**payload["subgroup_report"])))
            else:
                reports.append(rep)
            labels.append(payload.get("method", payload.get("dataset", path)))
        paths = experiments.plot_tradeoff(reports, args.out, labels)
        print("wrote " + " ".join(paths))
        return 0

    cfg = _experiment_config(args)

    if args.verb == "run":
        report = experiments.run_experiment(cfg)
        _print_report(cfg.dataset, report)
        history = read_history(f"{cfg.out_dir}/metrics.csv")
        if history:
            last = history[-1]
            print(f"final losses: adv={last.adv:.4f} con={last.con:.4f} "
                  f"reconst={last.reconst:.4f} total={last.total:.4f}")
        return 0

    if args.verb == "grid":
        result = experiments.grid_search(cfg)
        for params, rep, err in result.cells:
            tag = f"a={params['alpha']} g={params['gamma']} l={params['lambda']}"
            if err:
                print(f"{tag}: FAILED ({err})")
            else:
                _print_report(tag, rep)
        best = result.best()
        if best is not None:
            print(f"best cell ({result.rule}): {best[0]}")
        else:
            print("no successful cells")
        return 0

    if args.verb == "ablate":
        which = [args.which] if args.which != "both" else ["ep", "fm"]
        baseline = experiments.run_experiment(cfg)
        _print_report("full", baseline)
        for w in which:
            report = experiments.ablate(cfg, w)
            _print_report(f"no-{w}", report)
        return 0

    if args.verb == "sweep-epochs":
        rows = experiments.epoch_sweep(cfg, args.at)
        for epoch, rep in rows:
            _print_report(f"epoch {epoch}", rep)
        return 0

    if args.verb == "analyze":
        homophily, spearman, paths = experiments.analyze_experiment(
            cfg, checkpoint=args.checkpoint, batch_size=args.batch_size)
        print(f"homophily mean: original={homophily.mean_original:.4f} "
              f"fair={homophily.mean_fair:.4f}")
        print(f"|rho| reduced for {spearman.reduced_count()} of top {spearman.top_k} features")
        print("wrote " + " ".join(paths))
        return 0

    raise SystemExit(f"unhandled verb {args.verb!r}")


if __name__ == "__main__":
    sys.exit(main())
