"""Command-line front end: synth, train, evaluate, predict, export-rules.

Every command is deterministic given its full flag set; all randomness
flows from explicit seeds.  Flags override config-file values, which
override built-in defaults.  Config files are flat key=value text with
`#` comments; keys use the flag names with underscores.
"""

import argparse
import json
import sys

import numpy as np

from pnndt import data as data_mod
from pnndt import model_io
from pnndt import network as net_mod
from pnndt import pipeline as pipe_mod
from pnndt import tree as tree_mod
from pnndt.data import DataError
from pnndt.model_io import ModelError, SavedModel
from pnndt.network import GrowthError
from pnndt.neuron import FitConfig, FitError
from pnndt.pipeline import PipelineError
from pnndt.tree import DTConfig

ARMS = ("dt", "gmdh", "pnn", "pnndt", "knn")
ARM_LABELS = {
    "dt": "DT",
    "gmdh": "GMDH",
    "pnn": "PNN",
    "pnndt": "PNN&DT",
    "knn": "k-nn (raw features)",
}
KIND_LABELS = {
    "decision_tree": "DT",
    "pnn": "PNN",
    "pnn_dt": "PNN&DT",
    "knn": "k-nn (raw features)",
}

_USER_ERRORS = (DataError, ModelError, FitError, GrowthError, PipelineError)


def _add_seed_opts(sub):
    sub.add_argument("--seed", type=int, default=0, help="base random seed")
    sub.add_argument("--jobs", type=int, default=1,
                     help="worker cap for parallel candidate fitting")


def _add_grow_opts(sub):
    sub.add_argument("--chi", type=float, default=1.9,
                     help="weight-fit learning rate, in (1, 2)")
    sub.add_argument("--delta", type=float, default=1.5e-2,
                     help="weight-fit stop: min validation-MSE improvement")
    sub.add_argument("--max-steps", type=int, default=200,
                     help="weight-fit step cap")
    sub.add_argument("--f", type=int, default=None,
                     help="survivors per layer (default: 0.4 * C(m,2))")
    sub.add_argument("--stop-delta", type=float, default=1.5e-2,
                     help="layer growth stop: min change of criterion minimum")
    sub.add_argument("--max-layers", type=int, default=10, help="layer cap")
    sub.add_argument("--val-fraction", type=float, default=0.5,
                     help="validation share of the training data")
    sub.add_argument("--criterion-scope", choices=net_mod.CRITERION_SCOPES,
                     default="whole",
                     help="rows scored by the exterior criterion")
    sub.add_argument("--variant", choices=("random", "layered"), default="random",
                     help="network trainer used by the pnndt arm")
    sub.add_argument("--fail-limit", type=int, default=7,
                     help="random variant: consecutive rejections before stop")


def _add_tree_opts(sub):
    sub.add_argument("--lambda", dest="lam", type=int, default=300,
                     help="random threshold draws per feature")
    sub.add_argument("--min-examples", type=int, default=5,
                     help="node minimum: examples of each class")
    sub.add_argument("--min-fraction", type=float, default=0.004,
                     help="node minimum as a fraction of training rows")


def _add_config_opt(sub):
    sub.add_argument("--config", default=None,
                     help="key=value config file (flags override it)")


def build_parser(config_overrides=None, config_command=None):
    parser = argparse.ArgumentParser(
        prog="pnndt",
        description="Polynomial-network and decision-tree induction toolkit.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    synth = subs.add_parser("synth", formatter_class=fmt,
                            help="write a seeded synthetic dataset CSV")
    synth.add_argument("--n", type=int, required=True, help="rows per class")
    synth.add_argument("--relevant", type=int, required=True,
                       help="number of class-informative features (1..36)")
    synth.add_argument("--noise", type=float, default=0.0,
                       help="fraction of labels flipped, in [0, 1)")
    synth.add_argument("--seed", type=int, default=0, help="random seed")
    synth.add_argument("--out", required=True, help="output CSV path")
    synth.set_defaults(func=cmd_synth)

    train = subs.add_parser("train", formatter_class=fmt,
                            help="train a classifier and write a model file")
    train.add_argument("--train", required=True, help="training CSV")
    train.add_argument("--arm", choices=ARMS, default="pnndt",
                       help="classifier to train")
    train.add_argument("--out", required=True, help="model file to write")
    train.add_argument("--k", type=int, default=5, help="neighbors for knn")
    train.add_argument("--threshold", type=float, default=0.5,
                       help="network output cut for classification")
    _add_grow_opts(train)
    _add_tree_opts(train)
    _add_seed_opts(train)
    _add_config_opt(train)
    train.set_defaults(func=cmd_train)

    ev = subs.add_parser("evaluate", formatter_class=fmt,
                         help="report sensitivity/specificity/performance")
    ev.add_argument("--model", default=None, help="model file to evaluate")
    ev.add_argument("--test", required=True, help="test CSV")
    ev.add_argument("--train", default=None,
                    help="training CSV (experiment mode, with --arm/--runs)")
    ev.add_argument("--arm", choices=ARMS, default="pnndt",
                    help="classifier for experiment mode")
    ev.add_argument("--runs", type=int, default=1,
                    help="repeated training runs in experiment mode")
    ev.add_argument("--base-seed", type=int, default=0,
                    help="first seed of the run sequence")
    ev.add_argument("--dump", default=None,
                    help="write per-run metric values to this JSON file")
    ev.add_argument("--k", type=int, default=5, help="neighbors for knn")
    ev.add_argument("--threshold", type=float, default=0.5,
                    help="network output cut for classification")
    _add_grow_opts(ev)
    _add_tree_opts(ev)
    ev.add_argument("--jobs", type=int, default=1,
                    help="worker cap for parallel runs")
    _add_config_opt(ev)
    ev.set_defaults(func=cmd_evaluate)

    pred = subs.add_parser("predict", formatter_class=fmt,
                           help="print per-row predictions of a saved model")
    pred.add_argument("--model", required=True, help="model file")
    pred.add_argument("--data", required=True,
                      help="CSV of feature rows (label column optional)")
    pred.add_argument("--threshold", type=float, default=0.5,
                      help="network output cut for classification")
    pred.set_defaults(func=cmd_predict)

    exp = subs.add_parser("export-rules", formatter_class=fmt,
                          help="write the model's rule rendering to a file")
    exp.add_argument("--model", required=True, help="model file")
    exp.add_argument("--out", required=True, help="output text file")
    exp.set_defaults(func=cmd_export_rules)

    for name, sub in subs.choices.items():
        sub.set_defaults(_sub=sub)
        if config_overrides and name == config_command:
            sub.set_defaults(**config_overrides)
    return parser, subs.choices


def _read_config_file(path, sub):
    valid = {}
    for action in sub._actions:
        if action.dest in ("help", "func", "_sub", "command", "config"):
            continue
        valid[action.dest] = action
    overrides = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        if key not in valid:
            raise DataError(f"{path}:{lineno}: unknown key {key!r}")
        action = valid[key]
        try:
            overrides[key] = action.type(raw) if action.type else raw
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        if action.choices and overrides[key] not in action.choices:
            raise DataError(
                f"{path}:{lineno}: {key} must be one of {tuple(action.choices)}"
            )
    return overrides


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, _ = build_parser()
    args = parser.parse_args(argv)
    config = getattr(args, "config", None)
    if config:
        try:
            overrides = _read_config_file(config, args._sub)
        except DataError as exc:
            args._sub.error(str(exc))
        parser, _ = build_parser(overrides, args.command)
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cmd_synth(args):
    if not 1 <= args.relevant <= 36:
        args._sub.error(f"--relevant must be in 1..36, got {args.relevant}")
    if not 0.0 <= args.noise < 1.0:
        args._sub.error(f"--noise must be in [0, 1), got {args.noise}")
    if args.n < 1:
        args._sub.error("--n must be positive")
    ds = data_mod.synth_generate(args.n, args.relevant, args.noise, args.seed)
    try:
        data_mod.write_csv(ds, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}: {ds.n} rows, {ds.m + 1} columns")
    return 0


def _grow_config(args, seed):
    return net_mod.GrowConfig(
        F=args.f,
        Delta=args.stop_delta,
        fit=FitConfig(chi=args.chi, delta=args.delta,
                      max_steps=args.max_steps, seed=seed),
        max_layers=args.max_layers,
        seed=seed,
        val_fraction=args.val_fraction,
        criterion_scope=args.criterion_scope,
    )


def _dt_config(args, seed):
    return DTConfig(min_examples=args.min_examples,
                    min_fraction=args.min_fraction,
                    lam=args.lam, seed=seed)


def _config_echo(args, arm):
    echo = {"arm": arm, "seed": args.seed}
    if arm in ("gmdh", "pnn", "pnndt"):
        echo.update(
            chi=args.chi, delta=args.delta, max_steps=args.max_steps,
            F=args.f, stop_delta=args.stop_delta, max_layers=args.max_layers,
            val_fraction=args.val_fraction, criterion_scope=args.criterion_scope,
        )
    if arm in ("pnn", "pnndt"):
        echo["fail_limit"] = args.fail_limit
    if arm == "pnndt":
        echo["variant"] = args.variant
        echo["threshold"] = args.threshold
    if arm in ("dt", "pnndt"):
        echo.update(lam=args.lam, min_examples=args.min_examples,
                    min_fraction=args.min_fraction)
    if arm == "knn":
        echo["k"] = args.k
    return echo


def _normalize_training(ds):
    stats = data_mod.normalize_fit(ds)
    degen = [name for name, d in zip(ds.feature_names, stats.degenerate) if d]
    if degen:
        print(f"warning: degenerate (zero-variance) columns: {', '.join(degen)}",
              file=sys.stderr)
    return data_mod.normalize_apply(stats, ds), stats


def _train_arm(ds, arm, args, seed):
    """Train one arm on an already-normalized dataset."""
    grow = _grow_config(args, seed)
    dt_cfg = _dt_config(args, seed)
    if arm == "dt":
        x0 = ds.features[ds.labels == 0]
        x1 = ds.features[ds.labels == 1]
        return {"tree": tree_mod.find_node(x0, x1, dt_cfg)}
    if arm == "gmdh":
        net, _ = net_mod.train_gmdh(ds, grow, jobs=args.jobs)
        return {"network": net}
    if arm == "pnn":
        net = net_mod.train_gmdh_random(ds, grow, fail_limit=args.fail_limit,
                                        jobs=args.jobs)
        return {"network": net}
    if arm == "pnndt":
        net, tree, report = pipe_mod.train_pnn_dt(
            ds, grow, dt_cfg, variant=args.variant,
            fail_limit=args.fail_limit, threshold=args.threshold,
            jobs=args.jobs)
        return {"network": net, "tree": tree, "report": report}
    if arm == "knn":
        return {"knn": (ds, args.k)}
    raise ValueError(f"unknown arm {arm!r}")


def _classifier_for(trained, arm, args):
    if arm == "dt":
        return pipe_mod.tree_classifier(trained["tree"])
    if arm in ("gmdh", "pnn"):
        return pipe_mod.network_classifier(trained["network"], args.threshold)
    if arm == "pnndt":
        return pipe_mod.tree_classifier(trained["tree"])
    train_ds, k = trained["knn"]
    return pipe_mod.knn_classifier(train_ds, k)


def cmd_train(args):
    ds = data_mod.load_csv(args.train)
    ds_norm, stats = _normalize_training(ds)
    trained = _train_arm(ds_norm, args.arm, args, args.seed)
    echo = _config_echo(args, args.arm)

    if args.arm == "dt":
        model = SavedModel("decision_tree", ds.feature_names,
                           tree=trained["tree"], normalization=stats,
                           config=echo)
        print(tree_mod.render_tree(trained["tree"], ds.feature_names), end="")
    elif args.arm in ("gmdh", "pnn"):
        model = SavedModel("pnn", ds.feature_names, network=trained["network"],
                           normalization=stats, config=echo)
        print(net_mod.render_polynomials(trained["network"]), end="")
    elif args.arm == "pnndt":
        report = trained["report"]
        model = SavedModel(
            "pnn_dt", ds.feature_names,
            network=trained["network"], tree=trained["tree"],
            normalization=stats, config=echo,
            clean_report={
                "removed_examples": list(report.removed_indices),
                "kept_features": list(report.kept_features),
                "original_n": report.original_n,
                "original_m": report.original_m,
            },
        )
        print(net_mod.render_polynomials(trained["network"]), end="")
        print()
        print(tree_mod.render_tree(trained["tree"], ds.feature_names), end="")
    else:
        train_ds, k = trained["knn"]
        model = SavedModel("knn", ds.feature_names, knn_train=train_ds, k=k,
                           normalization=stats, config=echo)
        print(f"stored {train_ds.n} training rows for k={k}")
    model_io.save_model(model, args.out)
    print(f"saved model to {args.out}", file=sys.stderr)
    return 0


def _check_feature_names(model_names, data_names, what):
    if len(model_names) != len(data_names):
        raise DataError(
            f"model has {len(model_names)} features but {what} has "
            f"{len(data_names)}"
        )
    for i, (a, b) in enumerate(zip(model_names, data_names)):
        if a != b:
            raise DataError(
                f"feature {i} name mismatch: model {a!r} vs {what} {b!r}"
            )


def _model_classifier(model, threshold):
    if model.kind == "decision_tree":
        return pipe_mod.tree_classifier(model.tree)
    if model.kind == "pnn":
        return pipe_mod.network_classifier(model.network, threshold)
    if model.kind == "pnn_dt":
        return pipe_mod.tree_classifier(model.tree)
    return pipe_mod.knn_classifier(model.knn_train, model.k)


def cmd_evaluate(args):
    test = data_mod.load_csv(args.test)
    if args.model:
        model = model_io.load_model(args.model)
        _check_feature_names(model.feature_names, test.feature_names, "test data")
        if model.normalization is not None:
            test = data_mod.normalize_apply(model.normalization, test)
        metrics = pipe_mod.evaluate(_model_classifier(model, args.threshold), test)
        print(pipe_mod.REPORT_HEADER)
        print(pipe_mod.format_metrics_row(KIND_LABELS[model.kind], metrics))
        return 0
    if not args.train:
        print("error: provide --model or --train for experiment mode",
              file=sys.stderr)
        return 1

    train = data_mod.load_csv(args.train)
    _check_feature_names(train.feature_names, test.feature_names, "test data")
    train_norm, stats = _normalize_training(train)
    test_norm = data_mod.normalize_apply(stats, test)
    label = ARM_LABELS[args.arm]

    def experiment(seed):
        trained = _train_arm(train_norm, args.arm, args, seed)
        classify = _classifier_for(trained, args.arm, args)
        return pipe_mod.evaluate(classify, test_norm).as_dict()

    if args.runs <= 1:
        metrics = experiment(args.base_seed)
        print(pipe_mod.REPORT_HEADER)
        cells = [f"{100.0 * metrics[c]:.1f}" for c in pipe_mod.METRIC_COLUMNS]
        print(f"{label} | " + " | ".join(cells))
        return 0

    summaries = pipe_mod.repeated_runs(experiment, args.runs, args.base_seed,
                                       jobs=args.jobs)
    print(f"# runs={args.runs} base_seed={args.base_seed}; "
          "95% interval = mean±1.96*stddev over runs")
    print(pipe_mod.REPORT_HEADER)
    print(pipe_mod.format_summary_row(label, summaries))
    if args.dump:
        doc = {
            "arm": label,
            "runs": args.runs,
            "base_seed": args.base_seed,
            "half_width_rule": "1.96*stddev",
            "per_run": {c: list(summaries[c].per_run)
                        for c in pipe_mod.METRIC_COLUMNS},
        }
        with open(args.dump, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_predict(args):
    model = model_io.load_model(args.model)
    rows, names = data_mod.load_features_csv(args.data)
    _check_feature_names(model.feature_names, names, "input data")
    if model.normalization is not None:
        divisors = np.where(model.normalization.degenerate, 1.0,
                            model.normalization.stddevs)
        rows = (rows - model.normalization.means) / divisors
    if model.kind in ("decision_tree", "pnn_dt"):
        scored = [tree_mod.predict_dt(model.tree, row) for row in rows]
        preds = [(lab, p) for lab, p in scored]
    elif model.kind == "pnn":
        outs = net_mod.network_outputs(model.network, rows)
        preds = [(int(o >= args.threshold), float(o)) for o in outs]
    else:
        labels = pipe_mod.knn_classifier(model.knn_train, model.k)(rows)
        preds = [(int(l), float(l)) for l in labels]
    print("row,label,score")
    for i, (label, score) in enumerate(preds):
        print(f"{i},{label},{score:.6g}")
    return 0


def cmd_export_rules(args):
    model = model_io.load_model(args.model)
    if model.kind == "pnn":
        text = net_mod.render_polynomials(model.network)
    elif model.kind == "decision_tree":
        text = tree_mod.render_tree(model.tree, model.feature_names)
    elif model.kind == "pnn_dt":
        text = (net_mod.render_polynomials(model.network) + "\n"
                + tree_mod.render_tree(model.tree, model.feature_names))
    else:
        raise ModelError("k-nn models have no rule representation")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
