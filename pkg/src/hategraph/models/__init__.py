"""Model persistence: a single JSON envelope for every classifier type.

Weights are stored as flat float lists plus shapes so files stay diffable
and portable; loaders refuse envelopes with an unknown format version.
"""

import json

import numpy as np

FORMAT_VERSION = 1


def pack_array(arr: np.ndarray) -> dict:
    arr = np.asarray(arr)
    return {"shape": [int(s) for s in arr.shape],
            "data": [float(x) for x in arr.ravel()]}


def unpack_array(obj: dict) -> np.ndarray:
    return np.array(obj["data"], dtype=np.float64).reshape(obj["shape"])


def save_model(path, model) -> None:
    envelope = model.to_json_dict()
    envelope["format_version"] = FORMAT_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(envelope, fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    from hategraph.models.boosting import AdaBoostModel, GBTModel
    from hategraph.models.sage import SageModel

    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported model format version {version!r} "
            f"(this build reads version {FORMAT_VERSION})")
    loaders = {"sage": SageModel, "adaboost": AdaBoostModel, "gbt": GBTModel}
    model_type = obj.get("model_type")
    if model_type not in loaders:
        raise ValueError(f"{path}: unknown model type {model_type!r}")
    return loaders[model_type].from_json_dict(obj)
