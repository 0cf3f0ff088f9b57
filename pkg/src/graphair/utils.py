"""Seeding and small shared helpers."""

import json
import os
import random

import numpy as np
import torch


def set_global_seed(seed: int) -> None:
    """Seed every RNG the library draws from.

    After this call all stochastic operations (parameter initialization,
    relaxed-Bernoulli sampling, shuffling, negative sampling) are
    deterministic functions of the seed.
    """
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def derive_seed(seed: int, *stream: int) -> int:
    """Derive an independent substream seed from a base seed.

    Keeps sampling streams (splits, augmentation, classifier repeats)
    decoupled so one consumer cannot perturb another.
    """
    h = np.uint64(seed)
    for s in stream:
        h = np.uint64((int(h) * 6364136223846793005 + int(s) + 1442695040888963407) % 2**64)
    return int(h % 2**31)


def torch_generator(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen


def write_json(path, obj) -> None:
    """Atomic JSON write: temp file then rename."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
    os.replace(tmp, path)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
