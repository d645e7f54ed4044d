"""Command-line pipeline: extract | split | balance | train | eval | predict | serve.

Option precedence is flags > config file > built-in defaults. The config
file is flat ``key = value`` text (``#`` comments); keys equal the long flag
names. Machine output goes to files/stdout only, diagnostics to stderr.
Exit codes: 0 success, 1 validation/usage error, 2 I/O or format error.

Given the same argv, input files, and seed, every output artifact is
byte-identical across runs and worker counts; wall-clock timings are
therefore only written into reports when --timings is passed.
"""

import argparse
import csv
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import features as feat
from .cascade import CascadeModel, cascade_predict_batch, fit_cascade
from .classifiers import BASE_KINDS, WEIGHTING_MODES, predict_proba
from .data import (
    Dataset,
    read_feature_file,
    read_fvec,
    read_manifest,
    stratified_split,
    undersample,
    write_feature_file,
    write_fvec,
)
from .errors import FileFormatError, GuavacadeError, InputError
from .evaluation import classification_report, confusion_matrix, emit_report, timed
from .persist import load_model, save_model

REFINE_KINDS = ("gbdt-leaf", "gbdt-level", "none")


class _UsageError(Exception):
    def __init__(self, parser, message):
        self.parser = parser
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(self, message)


@dataclass
class Arg:
    name: str  # long flag without leading dashes; also the config-file key
    type: type = str
    default: object = None
    required: bool = False
    help: str = ""
    choices: tuple = None

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


COMMANDS: dict[str, list[Arg]] = {
    "extract": [
        Arg("manifest", help="CSV manifest (path,label) of PPM images for baseline features"),
        Arg("maps", help="FMAP file of backbone feature maps to pool with GAP"),
        Arg("out", required=True, help="output FVEC path"),
        Arg("image-side", int, 224, help="preprocessing target side length"),
    ],
    "split": [
        Arg("in", required=True, help="input FVEC"),
        Arg("ratio", float, 0.8, help="train fraction per class (round half up)"),
        Arg("seed", int, 0),
        Arg("train-out", required=True),
        Arg("holdout-out", required=True),
    ],
    "balance": [
        Arg("in", required=True, help="input FVEC"),
        Arg("seed", int, 0),
        Arg("out", required=True, help="undersampled FVEC"),
    ],
    "train": [
        Arg("features", required=True, help="training FVEC"),
        Arg("base", str, "ada", choices=BASE_KINDS),
        Arg("refine", str, "gbdt-leaf", choices=REFINE_KINDS),
        Arg("tau", float, 0.8, help="confidence threshold"),
        Arg("weighting", str, "none", choices=WEIGHTING_MODES),
        Arg("refine-scope", str, "full", choices=("full", "uncertain_only")),
        Arg("seed", int, 0),
        Arg("workers", int, 1, help="forest fitting threads (result-invariant)"),
        Arg("out", required=True, help="output model JSON"),
        # per-kind hyperparameters
        Arg("epochs", int, 30, help="lr: training epochs"),
        Arg("batch-size", int, 32, help="lr: mini-batch size"),
        Arg("eta", float, 1e-3, help="lr: Adam learning rate"),
        Arg("knn-k", int, 5, help="knn: neighbor count"),
        Arg("max-depth", int, 12, help="dt/rf: depth limit"),
        Arg("min-samples-leaf", int, 1, help="dt/rf: minimum samples per leaf"),
        Arg("n-trees", int, 100, help="rf: ensemble size"),
        Arg("n-estimators", int, 50, help="ada: boosting rounds"),
        Arg("stump-depth", int, 1, help="ada: weak learner depth"),
        Arg("gbdt-iters", int, 100),
        Arg("gbdt-learning-rate", float, 0.1),
        Arg("gbdt-max-leaves", int, 31),
        Arg("gbdt-max-depth", int, 6),
        Arg("gbdt-lambda", float, 1.0),
        Arg("gbdt-bins", int, 256),
    ],
    "eval": [
        Arg("model", required=True),
        Arg("features", required=True, help="holdout FVEC with labels"),
        Arg("report", required=True, help="output report JSON (text matrix beside it)"),
        Arg("timings", bool, False, help="include wall-clock timings in the report"),
    ],
    "predict": [
        Arg("model", required=True),
        Arg("features", required=True, help="FVEC (labels optional)"),
        Arg("out", required=True, help="output CSV: index,label,confidence,route"),
    ],
    "serve": [
        Arg("model", required=True),
        Arg("host", str, "127.0.0.1"),
        Arg("port", int, 8000),
    ],
}


def parse_config_file(path) -> dict:
    """Flat key = value lines; '#' starts a comment; keys match flag names."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            values[key.strip().replace("_", "-")] = raw.strip()
    return values


def _coerce(arg: Arg, raw: str):
    if arg.type is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InputError(f"config key {arg.name!r}: cannot parse {raw!r} as bool")
    try:
        return arg.type(raw)
    except ValueError as e:
        raise InputError(f"config key {arg.name!r}: {e}") from e


def build_parser() -> _Parser:
    parser = _Parser(prog="guavacade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")
    for command, args in COMMANDS.items():
        p = sub.add_parser(command, prog=f"guavacade {command}")
        p.add_argument("--config", default=None, help="flat key = value config file")
        for arg in args:
            flag = f"--{arg.name}"
            if arg.type is bool:
                p.add_argument(flag, dest=arg.dest, action="store_true", default=None,
                               help=arg.help)
            else:
                p.add_argument(flag, dest=arg.dest, type=arg.type, default=None,
                               help=arg.help)
    return parser


def resolve_config(command: str, ns: argparse.Namespace) -> dict:
    """Merge flags > config file > defaults into one fully resolved dict."""
    file_values = parse_config_file(ns.config) if ns.config else {}
    resolved = {"command": command}
    for arg in COMMANDS[command]:
        value = getattr(ns, arg.dest)
        if value is None and arg.name in file_values:
            value = _coerce(arg, file_values[arg.name])
        if value is None:
            value = arg.default
        if value is None and arg.required:
            raise InputError(f"missing required option --{arg.name}")
        if arg.choices and value not in arg.choices:
            raise InputError(f"--{arg.name} must be one of {', '.join(arg.choices)}")
        resolved[arg.dest] = value
    return resolved


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_extract(cfg: dict) -> int:
    if bool(cfg["manifest"]) == bool(cfg["maps"]):
        raise InputError("exactly one of --manifest or --maps is required")
    if cfg["manifest"]:
        manifest = read_manifest(cfg["manifest"])
        if not manifest.entries:
            raise InputError("manifest has no entries")
        root = os.path.dirname(os.path.abspath(cfg["manifest"]))
        rows = []
        for rel, _ in manifest.entries:
            path = rel if os.path.isabs(rel) else os.path.join(root, rel)
            img = feat.preprocess_image(feat.read_ppm(path), cfg["image_side"])
            rows.append(feat.baseline_histogram_features(img))
        matrix = np.array(rows, dtype=np.float32)
        ds = Dataset(matrix, manifest.label_ids(), manifest.class_names)
        write_feature_file(ds, cfg["out"])
        _log(f"extracted baseline features: n={ds.n} d={ds.d} -> {cfg['out']}")
    else:
        maps, labels, class_names = feat.read_feature_map_file(cfg["maps"])
        pooled = feat.gap_batch(maps).astype(np.float32)
        write_fvec(cfg["out"], pooled, labels, class_names)
        _log(f"pooled {maps.shape[0]} maps of {maps.shape[1:]} -> {cfg['out']}")
    return 0


def cmd_split(cfg: dict) -> int:
    ds = read_feature_file(cfg["in"])
    result = stratified_split(ds, cfg["ratio"], cfg["seed"])
    write_feature_file(result.train, cfg["train_out"])
    write_feature_file(result.holdout, cfg["holdout_out"])
    _log(f"split n={ds.n} into train={result.train.n} holdout={result.holdout.n}")
    return 0


def cmd_balance(cfg: dict) -> int:
    ds = read_feature_file(cfg["in"])
    balanced = undersample(ds, cfg["seed"])
    write_feature_file(balanced, cfg["out"])
    _log(f"balanced class counts {ds.class_counts().tolist()} -> "
         f"{balanced.class_counts().tolist()}")
    return 0


def _collect_params(cfg: dict):
    base_params = {
        "lr": {"epochs": cfg["epochs"], "batch_size": cfg["batch_size"], "eta": cfg["eta"],
               "seed": cfg["seed"]},
        "gnb": {},
        "knn": {"n_neighbors": cfg["knn_k"]},
        "dt": {"max_depth": cfg["max_depth"], "min_samples_leaf": cfg["min_samples_leaf"]},
        "rf": {"n_trees": cfg["n_trees"], "max_depth": cfg["max_depth"],
               "min_samples_leaf": cfg["min_samples_leaf"], "seed": cfg["seed"],
               "workers": cfg["workers"]},
        "ada": {"n_estimators": cfg["n_estimators"], "stump_depth": cfg["stump_depth"]},
    }[cfg["base"]]
    refine_params = {
        "n_iters": cfg["gbdt_iters"],
        "learning_rate": cfg["gbdt_learning_rate"],
        "max_leaves": cfg["gbdt_max_leaves"],
        "max_depth": cfg["gbdt_max_depth"],
        "reg_lambda": cfg["gbdt_lambda"],
        "n_bins": cfg["gbdt_bins"],
        "seed": cfg["seed"],
    }
    return base_params, refine_params


def cmd_train(cfg: dict) -> int:
    ds = read_feature_file(cfg["features"])
    base_params, refine_params = _collect_params(cfg)
    model = fit_cascade(
        ds,
        base_kind=cfg["base"],
        refine_kind=cfg["refine"],
        tau=cfg["tau"],
        weighting=cfg["weighting"],
        refine_scope=cfg["refine_scope"],
        base_params=base_params,
        refine_params=refine_params,
    )
    save_model(model, cfg["out"])
    info = model.fit_info
    _log(f"trained base={cfg['base']} ({info.base_seconds:.3f}s) "
         f"refine={cfg['refine']} ({info.refine_seconds:.3f}s) -> {cfg['out']}")
    if info.fallback_full:
        _log("warning: no uncertain training samples; refinement fell back to the full set")
    return 0


def _loss_histories(model) -> dict | None:
    training = {}
    if isinstance(model, CascadeModel):
        if getattr(model.base, "loss_history", None):
            training["base_loss_history"] = list(model.base.loss_history)
        if model.refine is not None and getattr(model.refine, "loss_history", None):
            training["refine_loss_history"] = list(model.refine.loss_history)
    elif getattr(model, "loss_history", None):
        training["loss_history"] = list(model.loss_history)
    return training or None


def cmd_eval(cfg: dict) -> int:
    model = load_model(cfg["model"])
    ds = read_feature_file(cfg["features"])
    if ds.d != model.d:
        raise InputError(f"feature dim {ds.d} does not match model dim {model.d}")
    if isinstance(model, CascadeModel):
        (labels, _gamma, routes, _probs), seconds = timed(
            lambda: cascade_predict_batch(model, ds.features)
        )
    else:
        probs, seconds = timed(lambda: predict_proba(model, ds.features))
        labels, routes = np.argmax(probs, axis=1), None
    cm = confusion_matrix(ds.labels, labels, ds.k, ds.class_names)
    report = classification_report(cm)
    report.model_kind = model.kind
    report.config = cfg
    report.training = _loss_histories(model)
    if routes is not None:
        report.tau = model.tau
        report.base_fraction = float(np.mean(routes == "base"))
        report.refine_fraction = float(np.mean(routes == "refine"))
    if cfg["timings"]:
        report.infer_seconds_total = seconds
        report.infer_seconds_per_sample = seconds / ds.n
    else:
        report.flags.append("timings_omitted")
    emit_report(report, cm, cfg["report"])
    _log(f"accuracy {report.accuracy:.4f} on n={ds.n} "
         f"(inference {seconds:.3f}s) -> {cfg['report']}")
    return 0


def cmd_predict(cfg: dict) -> int:
    model = load_model(cfg["model"])
    matrix, _labels, _names = read_fvec(cfg["features"])
    if matrix.shape[1] != model.d:
        raise InputError(f"feature dim {matrix.shape[1]} does not match model dim {model.d}")
    if isinstance(model, CascadeModel):
        labels, gamma, routes, _probs = cascade_predict_batch(model, matrix)
    else:
        probs = predict_proba(model, matrix)
        labels = np.argmax(probs, axis=1)
        gamma = probs.max(axis=1)
        routes = np.full(matrix.shape[0], "base")
    with open(cfg["out"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label", "confidence", "route"])
        for i in range(matrix.shape[0]):
            writer.writerow([i, model.class_names[labels[i]], repr(float(gamma[i])), routes[i]])
    _log(f"wrote {matrix.shape[0]} predictions -> {cfg['out']}")
    return 0


def cmd_serve(cfg: dict) -> int:
    from .service import build_server

    model = load_model(cfg["model"])
    server = build_server(model, cfg["host"], cfg["port"])
    _log(f"serving {model.kind} (d={model.d}) on http://{cfg['host']}:{server.server_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        _log("shutting down")
    finally:
        server.server_close()
    return 0


_DISPATCH = {
    "extract": cmd_extract,
    "split": cmd_split,
    "balance": cmd_balance,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "serve": cmd_serve,
}


def run_command(argv) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_usage(sys.stderr)
            return 1
        cfg = resolve_config(ns.command, ns)
        return _DISPATCH[ns.command](cfg)
    except _UsageError as e:
        e.parser.print_usage(sys.stderr)
        _log(f"error: {e}")
        return 1
    except SystemExit as e:  # argparse -h
        return int(e.code or 0)
    except (InputError, GuavacadeError) as e:
        if isinstance(e, FileFormatError):
            _log(f"format error: {e}")
            return 2
        _log(f"error: {e}")
        return 1
    except OSError as e:
        _log(f"i/o error: {e}")
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
