"""Alternating min-max training of (g, f) against the adversary k.

Every epoch samples one augmented view, lets the adversary take
``adversary_steps_per_epoch`` ascent steps on the adversarial term (with the
view's representations detached), then takes one descent step on the
combined objective over the augmentation and representation models with the
adversary frozen. Everything is full-batch and fully seeded: a (graph,
config) pair determines the loss history bit-for-bit.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass, field, fields

import numpy as np
import torch

from .data import Graph
from .losses import (LossBreakdown, LossWeights, NonFiniteLossError,
                     adversarial_loss, contrastive_loss, reconstruction_loss,
                     total_loss)
from .models import Adversary, Augmentor, Encoder, TensorGraph
from .utils import derive_seed, set_global_seed, torch_generator, write_json

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass
class TrainConfig:
    epochs: int = 500
    model_lr: float = 1e-4
    model_weight_decay: float = 1e-5
    adversary_lr: float = 1e-4
    adversary_weight_decay: float = 1e-5
    loss_weights: LossWeights = field(default_factory=LossWeights)
    ablate_ep: bool = False
    ablate_fm: bool = False
    seed: int = 0
    adversary_steps_per_epoch: int = 1
    hidden: int = 128
    temperature: float = 1.0
    dtype: str = "float32"
    dense_threshold: int = 5000
    checkpoint_epochs: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.epochs <= 0:
            raise ValueError("epochs must be > 0")
        for name in ("model_lr", "adversary_lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.adversary_steps_per_epoch < 1:
            raise ValueError("adversary_steps_per_epoch must be >= 1")
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype must be one of {sorted(_DTYPES)}")
        if isinstance(self.loss_weights, dict):
            self.loss_weights = LossWeights.from_dict(self.loss_weights)

    def to_dict(self) -> dict:
        out = {}
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if isinstance(v, LossWeights):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = list(v)
            out[f_.name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f_.name for f_ in fields(cls)}
        kwargs = {k: v for k, v in d.items() if k in known}
        if "checkpoint_epochs" in kwargs and kwargs["checkpoint_epochs"] is not None:
            kwargs["checkpoint_epochs"] = tuple(kwargs["checkpoint_epochs"])
        return cls(**kwargs)

    def torch_dtype(self) -> torch.dtype:
        return _DTYPES[self.dtype]


@dataclass
class TrainState:
    augmentor: Augmentor
    encoder: Encoder
    adversary: Adversary
    opt_model: torch.optim.Optimizer
    opt_adversary: torch.optim.Optimizer
    generator: torch.Generator
    np_rng: np.random.Generator
    epoch: int = 0
    history: list[LossBreakdown] = field(default_factory=list)


def init_state(tg: TensorGraph, config: TrainConfig) -> TrainState:
    """Build models and optimizers; all randomness derives from config.seed."""
    torch.manual_seed(derive_seed(config.seed, 1))
    dtype = config.torch_dtype()
    augmentor = Augmentor(tg.d, config.hidden, config.temperature).to(dtype)
    augmentor.set_output_priors(
        tg, edge_prior=tg.density(),
        sample_rng=np.random.default_rng(derive_seed(config.seed, 4)))
    encoder = Encoder(tg.d, config.hidden).to(dtype)
    adversary = Adversary(config.hidden, tg.n_groups, config.hidden).to(dtype)
    opt_model = torch.optim.Adam(
        list(augmentor.parameters()) + list(encoder.parameters()),
        lr=config.model_lr, weight_decay=config.model_weight_decay)
    opt_adversary = torch.optim.Adam(
        adversary.parameters(), lr=config.adversary_lr,
        weight_decay=config.adversary_weight_decay)
    return TrainState(
        augmentor=augmentor, encoder=encoder, adversary=adversary,
        opt_model=opt_model, opt_adversary=opt_adversary,
        generator=torch_generator(derive_seed(config.seed, 2)),
        np_rng=np.random.default_rng(derive_seed(config.seed, 3)),
    )


def adversary_ascent(adversary: Adversary, opt: torch.optim.Optimizer,
                     s: torch.Tensor, h_prime: torch.Tensor, steps: int) -> list[float]:
    """Ascend the adversarial term on fixed representations; returns the
    per-step values (before each update)."""
    values = []
    for _ in range(steps):
        probs = adversary.adversary_predict(h_prime)
        l_adv = adversarial_loss(s, probs)
        values.append(float(l_adv.detach()))
        opt.zero_grad()
        (-l_adv).backward()
        opt.step()
    return values


def train_step(state: TrainState, tg: TensorGraph, config: TrainConfig) -> TrainState:
    """One epoch: adversary ascent then a model descent step; appends history."""
    w = config.loss_weights
    candidates = None
    if not tg.dense and not config.ablate_ep:
        candidates = tg.sample_candidate_pairs(state.np_rng)
    view = state.augmentor.augment(tg, state.generator,
                                   ablate_ep=config.ablate_ep,
                                   ablate_fm=config.ablate_fm,
                                   candidate_pairs=candidates)
    h_prime = state.encoder.represent(view.sampled_adjacency, view.masked_features)

    adversary_ascent(state.adversary, state.opt_adversary, tg.s,
                     h_prime.detach(), config.adversary_steps_per_epoch)

    h = state.encoder.represent(tg.adjacency(), tg.x)
    s_hat = state.adversary.adversary_predict(h_prime)
    l_adv = adversarial_loss(tg.s, s_hat)
    l_con = contrastive_loss(h, h_prime, w.tau)
    if config.ablate_ep:
        # A' is A bit-exactly; the BCE term is identically zero and skipped.
        empty = tg.x.new_zeros(0)
        l_rec = reconstruction_loss(empty, empty, tg.x, view.masked_features, w.lam)
    elif view.candidate_pairs is None:
        l_rec = reconstruction_loss(tg.adjacency(), view.edge_probs,
                                    tg.x, view.masked_features, w.lam)
    else:
        l_rec = reconstruction_loss(view.edge_targets, view.edge_probs,
                                    tg.x, view.masked_features, w.lam)
    total, breakdown = total_loss(w, l_adv, l_con, l_rec)

    state.opt_model.zero_grad()
    state.opt_adversary.zero_grad()
    total.backward()
    state.opt_model.step()  # adversary params receive grads but never step here
    state.epoch += 1
    state.history.append(breakdown)
    return state


def _checkpoint_epochs(config: TrainConfig) -> set[int]:
    if config.checkpoint_epochs is not None:
        return {e for e in config.checkpoint_epochs if 1 <= e <= config.epochs} | {
            config.epochs}
    step = max(1, config.epochs // 10)
    return set(range(step, config.epochs + 1, step)) | {config.epochs}


def fit(graph: Graph, config: TrainConfig, out_dir: str | None = None):
    """Train for config.epochs; returns (TrainState, history).

    With ``out_dir`` set, persists checkpoints (final epoch plus every 10%,
    or the explicit ``checkpoint_epochs``), the per-epoch metrics CSV
    (epoch, adv, con, reconst, total), and trial metadata. A non-finite loss
    aborts the run but leaves the artifacts written so far in place.
    """
    set_global_seed(config.seed)
    tg = TensorGraph(graph, config.torch_dtype(), config.dense_threshold)
    state = init_state(tg, config)
    ckpts = _checkpoint_epochs(config)
    started = time.time()
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    try:
        for _ in range(config.epochs):
            train_step(state, tg, config)
            if out_dir and state.epoch in ckpts:
                save_checkpoint(state, config, tg,
                                os.path.join(out_dir, f"checkpoint_{state.epoch}.npz"),
                                dataset=graph.name)
    finally:
        if out_dir:
            _write_history(state.history, os.path.join(out_dir, "metrics.csv"))
            write_json(os.path.join(out_dir, "trial.json"), {
                "config": config.to_dict(),
                "dataset": graph.name,
                "epochs_completed": state.epoch,
                "wall_clock_sec": round(time.time() - started, 3),
            })
    return state, state.history


def _write_history(history: list[LossBreakdown], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "adv", "con", "reconst", "total"])
        for e, row in enumerate(history, start=1):
            writer.writerow([e] + row.as_row())


def read_history(path: str) -> list[LossBreakdown]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(LossBreakdown(adv=float(row["adv"]), con=float(row["con"]),
                                     reconst=float(row["reconst"]),
                                     total=float(row["total"])))
    return out


# ---------------------------------------------------------------------------
# Checkpoints: one npz archive per trial epoch, parameters plus JSON metadata
# ---------------------------------------------------------------------------


def save_checkpoint(state: TrainState, config: TrainConfig, tg: TensorGraph,
                    path: str, dataset: str = "") -> None:
    arrays = {}
    for prefix, module in (("augmentor", state.augmentor),
                           ("encoder", state.encoder),
                           ("adversary", state.adversary)):
        for name, tensor in module.state_dict().items():
            arrays[f"{prefix}/{name}"] = tensor.detach().cpu().numpy()
    meta = {
        "config": config.to_dict(),
        "dataset": dataset,
        "epoch": state.epoch,
        "in_dim": tg.d,
        "n_groups": tg.n_groups,
    }
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **arrays)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path: str):
    """Rebuild (augmentor, encoder, adversary, meta) from a checkpoint file."""
    with np.load(path) as npz:
        meta = json.loads(bytes(npz["__meta__"]).decode())
        arrays = {k: npz[k] for k in npz.files if k != "__meta__"}
    config = TrainConfig.from_dict(meta["config"])
    dtype = config.torch_dtype()
    augmentor = Augmentor(meta["in_dim"], config.hidden, config.temperature).to(dtype)
    encoder = Encoder(meta["in_dim"], config.hidden).to(dtype)
    adversary = Adversary(config.hidden, meta["n_groups"], config.hidden).to(dtype)
    for prefix, module in (("augmentor", augmentor), ("encoder", encoder),
                           ("adversary", adversary)):
        sd = {k.split("/", 1)[1]: torch.as_tensor(v)
              for k, v in arrays.items() if k.startswith(prefix + "/")}
        module.load_state_dict(sd)
    return augmentor, encoder, adversary, meta


# ---------------------------------------------------------------------------
# Deterministic evaluation view
# ---------------------------------------------------------------------------


def sample_eval_view(augmentor: Augmentor, encoder: Encoder, tg: TensorGraph,
                     seed: int, ablate_ep: bool = False, ablate_fm: bool = False):
    """Draw the view used for downstream evaluation and embed both graphs.

    Returns (view, H, H_prime) with H = f(A, X) and H' = f(A', X'), all
    detached. Deterministic given the seed.
    """
    gen = torch_generator(derive_seed(seed, 0xE7A1))
    rng = np.random.default_rng(derive_seed(seed, 0xE7A2))
    candidates = None
    if not tg.dense and not ablate_ep:
        candidates = tg.sample_candidate_pairs(rng)
    with torch.no_grad():
        view = augmentor.augment(tg, gen, ablate_ep=ablate_ep, ablate_fm=ablate_fm,
                                 candidate_pairs=candidates)
        h = encoder.represent(tg.adjacency(), tg.x)
        h_prime = encoder.represent(view.sampled_adjacency, view.masked_features)
    return view, h, h_prime
