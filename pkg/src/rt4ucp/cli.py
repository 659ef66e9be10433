"""Command-line interface.

Subcommands: gen-data, train, rt4u, conformal, evaluate, compare.

Every command writes ``config.txt`` into its output directory holding the
fully resolved parameters. ``rt4ucp --config OUT/config.txt`` replays the
run; flags given on the command line override values from the file.

Exit codes: 0 success, 2 usage error, 3 data validation error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence


from . import __version__
from . import formats as fm
from .classifier import TrainConfig, init_model, predict_logits, train
from .conformal import coverage_bounds
from .data_model import (
    RNG_ALGORITHM,
    SPLIT_TAGS,
    Dataset,
    NumericalError,
    ValidationError,
    one_hot,
    require_valid,
)
from .experiment import (
    CIFARQ_ALPHA,
    CIFARQ_FRACTIONS,
    CIFARQ_GEN,
    CIFARQ_TRAIN,
    SplitLogits,
    compare_methods,
    evaluate_run,
)
from .retrain import form_pseudo_labels, round_seed, rt4u_train
from .synthdata import QuadrantGenConfig, generate, split

log = logging.getLogger("rt4ucp")

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

# Plain SGD on unit-scale features needs a step far above the 1e-4 common
# with adaptive optimizers; 0.05 converges in 10 epochs here.
DEFAULT_EPOCHS = 10
DEFAULT_BATCH = 256
DEFAULT_LR = 0.05
DEFAULT_ALPHA = 0.05

PRESETS = {
    "cifarq": {
        "studies": CIFARQ_GEN["n_studies"],
        "slices": CIFARQ_GEN["slices_per_study"],
        "classes": CIFARQ_GEN["num_classes"],
        "features": CIFARQ_GEN["num_features"],
        "informative_fraction": CIFARQ_GEN["informative_fraction"],
        "separation": CIFARQ_GEN["class_separation"],
        "noise": CIFARQ_GEN["noise_sigma"],
        "fractions": ",".join(str(f) for f in CIFARQ_FRACTIONS),
        "epochs": CIFARQ_TRAIN["epochs"],
        "lr": CIFARQ_TRAIN["learning_rate"],
        "batch": CIFARQ_TRAIN["batch_size"],
        "alpha": CIFARQ_ALPHA,
    },
}


class UsageError(Exception):
    """Bad combination of command-line parameters."""


# -- config files --------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _config_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def write_config(out_dir: Path, args: argparse.Namespace) -> None:
    skip = {"func", "config", "verbose", "preset"}
    items = sorted((k, v) for k, v in vars(args).items() if k not in skip and k != "command")
    lines = [f"# {fm.TOOL} {__version__} resolved configuration", f"command = {args.command}"]
    lines += [f"{k} = {_config_value(v)}" for k, v in items]
    fm._write_lines(out_dir / "config.txt", lines)


def _convert(action: argparse.Action, value: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        low = value.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise UsageError(f"config key {action.dest!r} expects true/false, got {value!r}")
        return low in ("true", "1", "yes")
    if value == "":
        return None
    conv = action.type or str
    try:
        out = conv(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config key {action.dest!r}: {exc}") from None
    if action.choices is not None and out not in action.choices:
        raise UsageError(f"config key {action.dest!r}: {out!r} not in {list(action.choices)}")
    return out


def _apply_defaults(sub: argparse.ArgumentParser, values: dict, strict: bool) -> None:
    actions = {a.dest: a for a in sub._actions}
    converted = {}
    for key, value in values.items():
        if key not in actions:
            if strict:
                raise UsageError(f"unknown config key {key!r} for this command")
            continue
        converted[key] = value if not isinstance(value, str) else _convert(actions[key], value)
    sub.set_defaults(**converted)
    for key in converted:
        actions[key].required = False


# -- parser --------------------------------------------------------------------

def _fractions(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--fractions expects comma-separated numbers, got {text!r}") from None
    return vals


def _temperature(text: str) -> str:
    if text in ("none", "fit"):
        return text
    try:
        t = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--temperature expects none, fit or a positive number") from None
    if not t > 0:
        raise argparse.ArgumentTypeError("--temperature must be positive")
    return text


def _conformal_options(trials: int) -> argparse.ArgumentParser:
    # a fresh parent per subcommand: parents share Action objects, so
    # set_defaults on one subparser would leak into the others
    conf = argparse.ArgumentParser(add_help=False)
    conf.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    conf.add_argument("--agg", choices=["logit_sum", "weighted"], default="logit_sum")
    conf.add_argument("--weights", type=Path, help="CSV id,weight for --agg weighted")
    conf.add_argument("--mean-logits", action="store_true", help="average instead of sum logits per study")
    conf.add_argument("--force-nonempty", action="store_true", help="add the argmax class to empty sets")
    conf.add_argument("--temperature", type=_temperature, default="none", help="none, fit, or a value")
    conf.add_argument("--trials", type=int, default=trials)
    conf.add_argument("--cal-fraction", type=float, default=0.5)
    conf.add_argument("--resample", choices=["cal+test", "cal"], default="cal+test")
    return conf


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rt4ucp", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", type=Path, help="key = value file supplying defaults (flags override)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named default set, applied before --config")
    p.add_argument("-v", "--verbose", action="store_true")
    subs = p.add_subparsers(dest="command")

    seed = argparse.ArgumentParser(add_help=False)
    seed.add_argument("--seed", type=int, default=0)

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    training.add_argument("--lr", type=float, default=DEFAULT_LR)
    training.add_argument("--batch", type=int, default=DEFAULT_BATCH)
    training.add_argument("--hidden", type=int, default=0, help="hidden units (0 = linear model)")

    g = subs.add_parser("gen-data", parents=[seed], help="generate a synthetic multi-slice dataset")
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--studies", type=int, default=1000)
    g.add_argument("--slices", type=int, default=4)
    g.add_argument("--classes", type=int, default=10)
    g.add_argument("--features", type=int, default=64)
    g.add_argument("--informative-fraction", type=float, default=0.25)
    g.add_argument("--separation", type=float, default=4.0)
    g.add_argument("--noise", type=float, default=1.0)
    g.add_argument("--fractions", type=str, default="0.7,0.1,0.1,0.1", help="train,val,cal,test")
    g.add_argument("--ordinal", action="store_true", help="mark class order as ordinal")
    g.set_defaults(func=cmd_gen_data)

    t = subs.add_parser("train", parents=[seed, training], help="train on one-hot labels, record history")
    t.add_argument("--data", type=Path, required=True)
    t.add_argument("--out", type=Path, required=True)
    t.add_argument("--loss", choices=["ce", "mae"], default="ce")
    t.set_defaults(func=cmd_train)

    r = subs.add_parser("rt4u", parents=[seed, training], help="form pseudo-labels and re-train from scratch")
    r.add_argument("--data", type=Path, required=True)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--history", type=Path, help="history JSONL; without it round 1 is trained here")
    r.add_argument("--no-retrain", action="store_true", help="only write pseudo-labels")
    r.set_defaults(func=cmd_rt4u)

    c = subs.add_parser("conformal", parents=[seed, _conformal_options(100)], help="calibrate LABEL sets and run random trials")
    c.add_argument("--data", type=Path, required=True)
    c.add_argument("--logits", type=Path, required=True)
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--level", choices=["instance", "study"], default="instance")
    c.add_argument("--no-figures", action="store_true")
    c.set_defaults(func=cmd_conformal)

    e = subs.add_parser("evaluate", parents=[seed, _conformal_options(0)], help="headline metrics at instance and study level")
    e.add_argument("--data", type=Path, required=True)
    e.add_argument("--logits", type=Path, required=True)
    e.add_argument("--out", type=Path, required=True)
    e.add_argument("--level", choices=["both", "instance", "study"], default="both")
    e.add_argument("--bins", type=int, default=15)
    e.add_argument("--no-figures", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    m = subs.add_parser("compare", parents=[seed, training, _conformal_options(0)], help="baseline vs re-trained, with/without temperature")
    m.add_argument("--data", type=Path, required=True)
    m.add_argument("--out", type=Path, required=True)
    m.add_argument("--with-mae", action="store_true", help="also train an MAE-loss baseline")
    m.add_argument("--bins", type=int, default=15)
    m.add_argument("--no-figures", action="store_true")
    m.set_defaults(func=cmd_compare)
    return p


# -- helpers -------------------------------------------------------------------

def _comments(args) -> list[str]:
    return fm.trailer(args.seed)


def _description(args) -> str:
    return f"{fm.TOOL} {__version__} seed={args.seed}"


def load_data(data_dir: Path, required: Sequence[str] = ()) -> dict[str, Dataset]:
    meta_path = data_dir / "metadata.json"
    meta = fm.read_json(meta_path)
    if "num_classes" not in meta:
        raise ValidationError(f"{meta_path} lacks num_classes")
    k = int(meta["num_classes"])
    extra = {"ordinal": bool(meta.get("ordinal", False))}
    if meta.get("class_order"):
        extra["class_order"] = tuple(meta["class_order"])
    out = {}
    for tag in SPLIT_TAGS:
        path = data_dir / f"{tag}.csv"
        if not path.is_file():
            if tag in required:
                raise FileNotFoundError(f"input file not found: {path}")
            out[tag] = Dataset((), k, tag, **extra)
            continue
        out[tag] = require_valid(fm.read_dataset_csv(path, k, tag, **extra))
    for tag in required:
        if len(out[tag]) == 0:
            raise ValidationError(f"split '{tag}' is empty ({data_dir / (tag + '.csv')})")
    return out


def _train_config(args, loss: str = "ce") -> TrainConfig:
    try:
        return TrainConfig(epochs=args.epochs, learning_rate=args.lr, batch_size=args.batch, loss=loss, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_model(path: Path, model, args) -> None:
    fm.write_json(path, {"model": fm.model_to_json(model)}, args.seed)


def _write_split_logits(path: Path, model, splits: dict[str, Dataset], args) -> None:
    blocks = [
        (tag, ds.ids, predict_logits(model, ds.features))
        for tag, ds in splits.items()
        if len(ds)
    ]
    fm.write_logits_csv(path, blocks, _comments(args))


def _joined_logits(args, splits: dict[str, Dataset]) -> dict[str, Optional[SplitLogits]]:
    table = fm.read_logits_csv(args.logits)
    out: dict[str, Optional[SplitLogits]] = {}
    for tag in ("val", "cal", "test"):
        ds = splits[tag]
        if len(ds) == 0:
            out[tag] = None
            continue
        if tag not in table:
            raise ValidationError(f"{args.logits} has no rows for split '{tag}'")
        ids, z = table[tag]
        out[tag] = SplitLogits.join(ds, ids, z)
    return out


def _weights(args) -> Optional[dict[str, float]]:
    if args.agg == "weighted" and args.weights is None:
        raise UsageError("--agg weighted requires --weights")
    return fm.read_weights_csv(args.weights) if args.weights is not None else None


def _check_conformal_args(args) -> None:
    if not 0.0 < args.alpha < 1.0:
        raise UsageError("--alpha must lie in (0, 1)")
    if not 0.0 < args.cal_fraction < 1.0:
        raise UsageError("--cal-fraction must lie in (0, 1)")
    if args.trials < 0:
        raise UsageError("--trials must be >= 0")


# -- commands ------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    fractions = _fractions(args.fractions)
    if len(fractions) != len(SPLIT_TAGS):
        raise UsageError("--fractions needs four values: train,val,cal,test")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise UsageError(f"--fractions must be nonnegative and sum to 1, got {args.fractions}")
    try:
        cfg = QuadrantGenConfig(
            n_studies=args.studies,
            slices_per_study=args.slices,
            num_classes=args.classes,
            num_features=args.features,
            informative_fraction=args.informative_fraction,
            class_separation=args.separation,
            noise_sigma=args.noise,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    splits = split(generate(cfg), fractions, args.seed)
    out = args.out
    for tag, ds in splits.items():
        fm.write_dataset_csv(out / f"{tag}.csv", ds, _comments(args))
    fm.write_json(
        out / "metadata.json",
        {
            "num_classes": cfg.num_classes,
            "num_features": cfg.num_features,
            "ordinal": bool(args.ordinal),
            "label_convention": "0-based class indices",
            "rng": RNG_ALGORITHM,
            "generator": cfg.to_dict(),
            "fractions": fractions,
            "splits": {tag: {"file": f"{tag}.csv", "instances": len(ds), "studies": len(set(ds.study_ids))}
                       for tag, ds in splits.items()},
        },
        args.seed,
    )
    write_config(out, args)
    log.info("wrote %s", ", ".join(f"{t}={len(d)}" for t, d in splits.items()))
    return 0


def cmd_train(args) -> int:
    splits = load_data(args.data, required=("train",))
    tr = splits["train"]
    cfg = _train_config(args, args.loss)
    cfg1 = TrainConfig(cfg.epochs, cfg.learning_rate, cfg.batch_size, cfg.loss, round_seed(args.seed, 1))
    try:
        model = init_model(tr.num_features, args.hidden, tr.num_classes, cfg1.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model, history = train(model, tr, one_hot(tr.labels, tr.num_classes), cfg1)
    out = args.out
    _write_model(out / "model.json", model, args)
    fm.write_history_jsonl(out / "history.jsonl", history, args.seed)
    _write_split_logits(out / "logits.csv", model, splits, args)
    write_config(out, args)
    return 0


def cmd_rt4u(args) -> int:
    out = args.out
    if args.history is None:
        splits = load_data(args.data, required=("train",))
        if args.no_retrain:
            raise UsageError("--no-retrain needs --history (nothing to form pseudo-labels from)")
        cfg = _train_config(args)
        res = rt4u_train(splits["train"], cfg, args.hidden)
        fm.write_history_jsonl(out / "history.jsonl", res.history, args.seed)
        pseudo, model = res.pseudo_labels, res.model
    else:
        history = fm.read_history_jsonl(args.history)
        pseudo = form_pseudo_labels(history)
        if args.epochs != history.num_epochs:
            log.warning(
                "--epochs=%d differs from the history's %d epochs; pseudo-labels average all %d recorded epochs",
                args.epochs, history.num_epochs, history.num_epochs,
            )
        model = None
        if not args.no_retrain:
            splits = load_data(args.data, required=("train",))
            tr = splits["train"]
            if set(pseudo.ids) != set(tr.ids):
                raise ValidationError("history ids do not match the training split ids")
            cfg = _train_config(args)
            cfg2 = TrainConfig(cfg.epochs, cfg.learning_rate, cfg.batch_size, cfg.loss, round_seed(args.seed, 2))
            model = init_model(tr.num_features, args.hidden, tr.num_classes, cfg2.seed)
            model, _ = train(model, tr, pseudo, cfg2)
    fm.write_pseudo_labels_csv(out / "pseudo_labels.csv", pseudo, _comments(args))
    if model is not None:
        _write_model(out / "model.json", model, args)
        _write_split_logits(out / "logits.csv", model, splits, args)
    write_config(out, args)
    return 0


def cmd_conformal(args) -> int:
    _check_conformal_args(args)
    splits = load_data(args.data, required=("cal", "test"))
    if args.temperature == "fit" and len(splits["val"]) == 0:
        raise ValidationError("--temperature fit needs a non-empty val split")
    joined = _joined_logits(args, splits)
    res = evaluate_run(
        joined["val"], joined["cal"], joined["test"], args.alpha,
        temperature=args.temperature,
        levels=(args.level,),
        agg=args.agg,
        weights=_weights(args),
        mean_logits=args.mean_logits,
        force_nonempty=args.force_nonempty,
        n_trials=args.trials,
        cal_fraction=args.cal_fraction,
        seed=args.seed,
        resample=args.resample,
    )
    lv = res.levels[args.level]
    out = args.out
    lower, upper = coverage_bounds(args.alpha, lv.calibration.n_cal)
    fm.write_calibration_json(
        out / "calibration.json", lv.calibration, args.seed,
        level=args.level, temperature=res.temperature, coverage_bounds=[lower, upper],
    )
    fm.write_sets_csv(out / "sets.csv", lv.view.ids, lv.view.labels, lv.mask, _comments(args))
    if lv.trials is not None:
        fm.write_trials_csv(out / "trials.csv", lv.trials, _comments(args))
        fm.write_json(out / "trials.json", {**lv.trials.summary(), "level": args.level}, args.seed)
        if not args.no_figures:
            from .plotting import trials_figure

            n_cal = lv.trials.n_cal
            trials_figure(lv.trials.bcov, lv.trials.mean_set_size, args.alpha, out / "trials.png",
                          upper=coverage_bounds(args.alpha, n_cal)[1], description=_description(args))
        log.info("median BCov %.4f, median |C(x)| %.3f over %d trials",
                 lv.trials.median_bcov, lv.trials.median_set_size, lv.trials.n_trials)
    write_config(out, args)
    return 0


def cmd_evaluate(args) -> int:
    _check_conformal_args(args)
    splits = load_data(args.data, required=("cal", "test"))
    if args.temperature == "fit" and len(splits["val"]) == 0:
        raise ValidationError("--temperature fit needs a non-empty val split")
    joined = _joined_logits(args, splits)
    levels = ("instance", "study") if args.level == "both" else (args.level,)
    res = evaluate_run(
        joined["val"], joined["cal"], joined["test"], args.alpha,
        temperature=args.temperature,
        levels=levels,
        agg=args.agg,
        weights=_weights(args),
        mean_logits=args.mean_logits,
        force_nonempty=args.force_nonempty,
        bins=args.bins,
        n_trials=args.trials,
        cal_fraction=args.cal_fraction,
        seed=args.seed,
        resample=args.resample,
    )
    out = args.out
    metrics = {"alpha": args.alpha, "ordinal_classes": splits["test"].ordinal, **res.metrics()}
    fm.write_json(out / "metrics.json", metrics, args.seed)
    for name, lv in res.levels.items():
        fm.write_reliability_csv(out / f"reliability_{name}.csv", lv.reliability, _comments(args))
    if not args.no_figures:
        from .plotting import calibration_figure, set_size_figure

        for name, lv in res.levels.items():
            calibration_figure({name: lv.reliability}, {name: lv.view.probs.max(axis=1)},
                               out / f"calibration_{name}.png", title=f"{name} level",
                               description=_description(args))
            set_size_figure({name: lv.mask.sum(axis=1)}, splits["test"].num_classes,
                            out / f"set_sizes_{name}.png", informative=lv.view.informative,
                            title=f"{name} level", description=_description(args))
    write_config(out, args)
    return 0


COMPARE_COLUMNS = ("bacc", "bcov", "mean_set_size", "ece", "ordinality_fraction")


def cmd_compare(args) -> int:
    _check_conformal_args(args)
    splits = load_data(args.data, required=("train", "val", "cal", "test"))
    cfg = _train_config(args)
    results = compare_methods(
        splits, cfg, args.alpha, hidden_dim=args.hidden, include_mae=args.with_mae,
        agg=args.agg, weights=_weights(args), mean_logits=args.mean_logits,
        force_nonempty=args.force_nonempty, bins=args.bins, n_trials=args.trials,
        cal_fraction=args.cal_fraction, seed=args.seed, resample=args.resample,
    )
    out = args.out
    lines = ["method,level,temperature," + ",".join(COMPARE_COLUMNS)]
    for name, res in results.items():
        for level, lv in res.levels.items():
            vals = ",".join(fm.fmt(lv.metrics[c]) for c in COMPARE_COLUMNS)
            lines.append(f"{name},{level},{fm.fmt(res.temperature)},{vals}")
    fm._write_lines(out / "comparison.csv", lines + _comments(args))
    fm.write_json(out / "comparison.json", {"alpha": args.alpha,
                                             "methods": {n: r.metrics() for n, r in results.items()}}, args.seed)
    if not args.no_figures:
        from .plotting import calibration_figure, set_size_figure

        for level in ("instance", "study"):
            calibration_figure(
                {n: r.levels[level].reliability for n, r in results.items()},
                {n: r.levels[level].view.probs.max(axis=1) for n, r in results.items()},
                out / f"calibration_{level}.png", title=f"{level} level", description=_description(args),
            )
        set_size_figure(
            {n: r.levels["instance"].mask.sum(axis=1) for n, r in results.items() if not n.endswith("+Temp")},
            splits["test"].num_classes, out / "set_sizes_instance.png",
            informative=results["CE"].levels["instance"].view.informative, description=_description(args),
        )
    for line in lines:
        print(line)
    write_config(out, args)
    return 0


# -- entry point -----------------------------------------------------------------

def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument("--config", type=Path)
    pre_parser.add_argument("--preset", choices=sorted(PRESETS))
    pre, rest = pre_parser.parse_known_args(argv)

    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((tok for tok in rest if tok in subs.choices), None)
    file_values = read_config(pre.config) if pre.config else {}
    from_file = file_values.pop("command", None)
    if command is None:
        if from_file is None:
            if any(tok in ("-h", "--help", "--version") for tok in rest):
                return parser.parse_args(rest)
            parser.print_usage(sys.stderr)
            raise UsageError("no command given")
        if from_file not in subs.choices:
            raise UsageError(f"unknown command {from_file!r} in {pre.config}")
        command = from_file
        # top-level flags must precede the subcommand, everything else follows it
        top = [tok for tok in rest if tok in ("-v", "--verbose")]
        rest = top + [command] + [tok for tok in rest if tok not in ("-v", "--verbose")]
    sub = subs.choices[command]
    if pre.preset:
        _apply_defaults(sub, PRESETS[pre.preset], strict=False)
    if file_values:
        _apply_defaults(sub, file_values, strict=True)
    args = parser.parse_args(rest)
    args.config = pre.config
    args.preset = pre.preset
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except UsageError as exc:
        print(f"rt4ucp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"rt4ucp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not log.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        log.addHandler(handler)
    log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rt4ucp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"rt4ucp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"rt4ucp: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
