"""Versioned JSON model envelopes.

Every model serializes as {schema_version, kind, K, d, class_names, params}.
Floats go through Python's shortest round-trip repr, so load(save(m))
predicts bit-for-bit like m. Cascade envelopes nest the envelopes of both
stages. Wall-clock fit times are deliberately not stored: fixed-seed runs
must produce byte-identical model files.
"""

import json

import numpy as np

from .cascade import CascadeFitInfo, CascadeModel
from .classifiers import AdaBoostModel, GaussianNBModel, KnnModel
from .errors import FileFormatError, InputError
from .gbdt import GbdtConfig, GbdtModel, RegTree
from .softmax_head import LinearModel
from .trees import CartModel, ClassTree, ForestModel

MODEL_SCHEMA_VERSION = 1


def _class_tree_to_dict(tree: ClassTree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "dist": tree.dist.tolist(),
    }


def _class_tree_from_dict(doc: dict) -> ClassTree:
    return ClassTree(
        feature=np.array(doc["feature"], dtype=np.int64),
        threshold=np.array(doc["threshold"], dtype=np.float64),
        left=np.array(doc["left"], dtype=np.int64),
        right=np.array(doc["right"], dtype=np.int64),
        dist=np.array(doc["dist"], dtype=np.float64),
    )


def _reg_tree_to_dict(tree: RegTree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def _reg_tree_from_dict(doc: dict) -> RegTree:
    return RegTree(
        feature=np.array(doc["feature"], dtype=np.int64),
        threshold=np.array(doc["threshold"], dtype=np.float64),
        left=np.array(doc["left"], dtype=np.int64),
        right=np.array(doc["right"], dtype=np.int64),
        value=np.array(doc["value"], dtype=np.float64),
    )


def model_to_envelope(model) -> dict:
    kind = model.kind
    if kind == "lr":
        params = {
            "weight": model.weight.tolist(),
            "bias": model.bias.tolist(),
            "loss_history": list(model.loss_history),
        }
    elif kind == "gnb":
        params = {
            "priors": model.priors.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
        }
    elif kind == "knn":
        params = {
            "n_neighbors": model.n_neighbors,
            "features": model.features.tolist(),
            "labels": model.labels.tolist(),
        }
    elif kind == "dt":
        params = {
            "max_depth": model.max_depth,
            "min_samples_leaf": model.min_samples_leaf,
            "tree": _class_tree_to_dict(model.tree),
        }
    elif kind == "rf":
        params = {
            "n_trees": model.n_trees,
            "mtry": model.mtry,
            "bootstrap": model.bootstrap,
            "seed": model.seed,
            "trees": [_class_tree_to_dict(t) for t in model.trees],
        }
    elif kind == "ada":
        params = {
            "n_estimators": model.n_estimators,
            "stump_depth": model.stump_depth,
            "alphas": list(model.alphas),
            "stumps": [_class_tree_to_dict(t) for t in model.stumps],
        }
    elif kind in ("gbdt-leaf", "gbdt-level"):
        cfg = model.config
        params = {
            "config": {
                "n_iters": cfg.n_iters,
                "learning_rate": cfg.learning_rate,
                "growth": cfg.growth,
                "max_leaves": cfg.max_leaves,
                "max_depth": cfg.max_depth,
                "reg_lambda": cfg.reg_lambda,
                "min_hessian_per_leaf": cfg.min_hessian_per_leaf,
                "n_bins": cfg.n_bins,
                "seed": cfg.seed,
            },
            "base_score": model.base_score.tolist(),
            "trees": [[_reg_tree_to_dict(t) for t in round_trees] for round_trees in model.trees],
            "loss_history": list(model.loss_history),
        }
        kind = "gbdt"
    elif kind == "cascade":
        info = model.fit_info
        params = {
            "tau": model.tau,
            "refine_scope": info.refine_scope,
            "weighting": info.weighting,
            "route_stats": {
                "base_fraction": info.base_fraction,
                "refine_fraction": info.refine_fraction,
            },
            "fallback_full": info.fallback_full,
            "base": model_to_envelope(model.base),
            "refine": None if model.refine is None else model_to_envelope(model.refine),
        }
    else:
        raise InputError(f"cannot serialize model kind {kind!r}")
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "kind": kind,
        "K": model.k,
        "d": model.d,
        "class_names": list(model.class_names),
        "params": params,
    }


def model_from_envelope(doc: dict):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InputError("not a model envelope")
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise InputError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    kind = doc["kind"]
    class_names = list(doc["class_names"])
    d = int(doc["d"])
    params = doc["params"]
    if kind == "lr":
        return LinearModel(
            weight=np.array(params["weight"], dtype=np.float64),
            bias=np.array(params["bias"], dtype=np.float64),
            class_names=class_names,
            loss_history=list(params["loss_history"]),
        )
    if kind == "gnb":
        return GaussianNBModel(
            priors=np.array(params["priors"], dtype=np.float64),
            means=np.array(params["means"], dtype=np.float64),
            variances=np.array(params["variances"], dtype=np.float64),
            class_names=class_names,
        )
    if kind == "knn":
        return KnnModel(
            features=np.array(params["features"], dtype=np.float32),
            labels=np.array(params["labels"], dtype=np.int64),
            n_neighbors=int(params["n_neighbors"]),
            class_names=class_names,
        )
    if kind == "dt":
        return CartModel(
            tree=_class_tree_from_dict(params["tree"]),
            class_names=class_names,
            d=d,
            max_depth=params["max_depth"],
            min_samples_leaf=int(params["min_samples_leaf"]),
        )
    if kind == "rf":
        return ForestModel(
            trees=[_class_tree_from_dict(t) for t in params["trees"]],
            class_names=class_names,
            d=d,
            n_trees=int(params["n_trees"]),
            mtry=int(params["mtry"]),
            bootstrap=bool(params["bootstrap"]),
            seed=int(params["seed"]),
        )
    if kind == "ada":
        return AdaBoostModel(
            stumps=[_class_tree_from_dict(t) for t in params["stumps"]],
            alphas=[float(a) for a in params["alphas"]],
            class_names=class_names,
            d=d,
            n_estimators=int(params["n_estimators"]),
            stump_depth=int(params["stump_depth"]),
        )
    if kind == "gbdt":
        cfg = GbdtConfig(**params["config"])
        return GbdtModel(
            trees=[[_reg_tree_from_dict(t) for t in rt] for rt in params["trees"]],
            base_score=np.array(params["base_score"], dtype=np.float64),
            config=cfg,
            class_names=class_names,
            d=d,
            loss_history=list(params["loss_history"]),
        )
    if kind == "cascade":
        info = CascadeFitInfo(
            base_fraction=float(params["route_stats"]["base_fraction"]),
            refine_fraction=float(params["route_stats"]["refine_fraction"]),
            fallback_full=bool(params["fallback_full"]),
            weighting=params["weighting"],
            refine_scope=params["refine_scope"],
        )
        return CascadeModel(
            base=model_from_envelope(params["base"]),
            refine=None if params["refine"] is None else model_from_envelope(params["refine"]),
            tau=float(params["tau"]),
            class_names=class_names,
            fit_info=info,
        )
    raise InputError(f"unknown model kind {kind!r}")


def dumps_model(model) -> str:
    return json.dumps(model_to_envelope(model), indent=2, ensure_ascii=False) + "\n"


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FileFormatError(path, e.pos, f"invalid JSON: {e.msg}") from e
    try:
        return model_from_envelope(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(path, 0, f"bad model envelope: {e}") from e
