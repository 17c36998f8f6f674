"""Adam training loop with weight decay, checkpointing on best
validation AUC, and the 2x2 component ablation grid.

Determinism contract: given the same dataset, split and seed, training
is bit-reproducible. Initialization, shuffling and augmentation each
draw from their own named streams (see rngs), and the optimizer state
updates in a fixed parameter order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import data, losses, metrics, model, ops, rngs
from .errors import ConfigError, DataError, DivergenceError

log = logging.getLogger(__name__)

CONV_WEIGHT_KEYS = ("conv1.weights", "conv2.weights", "conv3.weights")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch: int = 32
    epochs: int = 100          # desk-scale default; 500 reproduces the full protocol
    l2_lambda: float = 1e-2
    seed: int = 42
    se_enabled: bool = True
    virtual_enabled: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    patience: int = 30         # early stop if validation AUC stalls this long
    augment: bool = True

    def __post_init__(self):
        if self.lr <= 0 or self.l2_lambda < 0:
            raise ConfigError("lr must be positive and l2_lambda non-negative")
        if self.batch < 1 or self.epochs < 1:
            raise ConfigError("batch and epochs must be >= 1")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: model.ParamSet) -> "AdamState":
        flat = params.as_dict()
        return cls(m={k: np.zeros_like(a) for k, a in flat.items()},
                   v={k: np.zeros_like(a) for k, a in flat.items()})


def adam_step(
    params: model.ParamSet,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-7,
) -> None:
    """One bias-corrected Adam update, in place, in canonical key order."""
    flat = params.as_dict()
    for name in flat:
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name} at step {state.t + 1}")
        if g.shape != flat[name].shape:
            raise ConfigError(f"gradient shape {g.shape} != param shape {flat[name].shape} for {name}")
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for name, p in flat.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


@dataclass
class Checkpoint:
    params: model.ParamSet
    net_config: model.NetworkConfig
    epoch: int
    val_auc: float
    config_hash: str = ""
    dataset_hash: str = ""


@dataclass
class FoldHistory:
    train_loss: list[float] = field(default_factory=list)
    val_auc: list[float] = field(default_factory=list)
    best_epoch: int = -1


def _resolve_network(net: model.NetworkConfig, cfg: TrainConfig) -> model.NetworkConfig:
    """Apply the ablation flags onto the architecture config."""
    return replace(net, se_enabled=cfg.se_enabled,
                   num_virtual=1 if cfg.virtual_enabled else 0)


def _loss_and_grads(
    net: model.NetworkConfig,
    params: model.ParamSet,
    batch: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
) -> tuple[float, dict[str, np.ndarray]]:
    """Forward, data loss (+ weight decay), full backward pass."""
    trace = model.forward(net, params, batch, train_mode=True)
    if cfg.virtual_enabled:
        out = losses.virtual_softmax_loss(trace.embedding, params.head_w, labels,
                                          num_virtual=net.num_virtual)
        d_emb = out.d_embedding
        grads = {"head.w": out.d_weights, "head.b": np.zeros_like(params.head_b)}
    else:
        out = losses.softmax_ce(trace.logits, labels)
        d_emb, d_head_w, d_head_b = ops.fc_backward(trace.embedding, params.head_w, out.d_logits)
        grads = {"head.w": d_head_w, "head.b": d_head_b}
    grads.update(model.backward_from_embedding(net, params, trace, d_emb))

    conv_ws = [params.as_dict()[k] for k in CONV_WEIGHT_KEYS]
    penalty, wd_grads = ops.l2_penalty(conv_ws, cfg.l2_lambda)
    for key, g in zip(CONV_WEIGHT_KEYS, wd_grads):
        grads[key] = grads[key] + g
    return out.value + penalty, grads


def regularized_loss(
    net: model.NetworkConfig,
    params: model.ParamSet,
    batch: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
) -> float:
    """Exactly the scalar the optimizer descends (for gradient checks)."""
    trace = model.forward(net, params, batch, train_mode=False)
    if cfg.virtual_enabled:
        value = losses.virtual_softmax_loss(trace.embedding, params.head_w, labels,
                                            num_virtual=net.num_virtual).value
    else:
        value = losses.softmax_ce(trace.logits, labels).value
    conv_ws = [params.as_dict()[k] for k in CONV_WEIGHT_KEYS]
    penalty, _ = ops.l2_penalty(conv_ws, cfg.l2_lambda)
    return value + penalty


class FoldData:
    """Per-fold tensors, preprocessed with that fold's training statistics."""

    def __init__(self, store: data.CaseStore, train_ids: list[str], val_ids: list[str],
                 out_hw: int):
        self.stats = data.fit_normalization(
            [store.get_raw(c) for c in train_ids], source=f"train:{len(train_ids)}"
        )
        self.x_train = np.stack([data.prepare_volume(store.get_raw(c), self.stats, out_hw)
                                 for c in train_ids])
        self.y_train = store.labels(train_ids)
        self.x_val = np.stack([data.prepare_volume(store.get_raw(c), self.stats, out_hw)
                               for c in val_ids])
        self.y_val = store.labels(val_ids)


def train_fold(
    cfg: TrainConfig,
    net_config: model.NetworkConfig,
    store: data.CaseStore,
    split: data.FoldSplit,
    fold: int,
) -> tuple[Checkpoint, FoldHistory]:
    """Train one fold; return the snapshot with the best validation
    micro-OvR AUC. Only reads cases assigned to this fold's train/val
    partitions -- never the holdout."""
    if fold not in range(split.k):
        raise ConfigError(f"fold {fold} outside 0..{split.k - 1}")
    net = _resolve_network(net_config, cfg)
    train_ids = split.train_ids(fold)
    val_ids = split.val_ids(fold)
    if not train_ids or not val_ids:
        raise DataError(f"fold {fold} has an empty partition")
    fd = FoldData(store, train_ids, val_ids, net.input_hw)

    params = model.init_params(net, rngs.stream(cfg.seed, rngs.INIT))
    state = AdamState.for_params(params)
    history = FoldHistory()
    best: Checkpoint | None = None
    n = len(train_ids)

    for epoch in range(cfg.epochs):
        order = np.arange(n)
        rngs.stream(cfg.seed, rngs.SHUFFLE, fold, epoch).shuffle(order)
        aug_rng = rngs.stream(cfg.seed, rngs.AUGMENT, fold, epoch)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch):
            idx = order[start : start + cfg.batch]
            xb = fd.x_train[idx]
            if cfg.augment:
                xb = np.stack([data.augment(x, aug_rng) for x in xb])
            loss, grads = _loss_and_grads(net, params, xb, fd.y_train[idx], cfg)
            if not np.isfinite(loss):
                raise DivergenceError(f"loss diverged at epoch {epoch}")
            adam_step(params, grads, state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
            epoch_loss += loss * len(idx)
        history.train_loss.append(epoch_loss / n)

        proba = model.predict_proba(net, params, fd.x_val)
        val_auc = metrics.micro_ovr_auc(proba, fd.y_val).auc
        history.val_auc.append(val_auc)
        if best is None or val_auc > best.val_auc:
            best = Checkpoint(params=params.copy(), net_config=net, epoch=epoch, val_auc=val_auc)
            history.best_epoch = epoch
        if cfg.patience and epoch - history.best_epoch >= cfg.patience:
            log.info("fold %d: early stop at epoch %d (best %d)", fold, epoch, history.best_epoch)
            break
    return best, history


def evaluate_checkpoint(
    ckpt: Checkpoint,
    store: data.CaseStore,
    split: data.FoldSplit,
    fold: int,
    case_ids: list[str] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and labels on the holdout (or given) cases, using the
    fold's training normalization statistics."""
    train_ids = split.train_ids(fold)
    ids = case_ids if case_ids is not None else sorted(split.holdout)
    stats = data.fit_normalization([store.get_raw(c) for c in train_ids],
                                   source=f"train:{len(train_ids)}")
    x = np.stack([data.prepare_volume(store.get_raw(c), stats, ckpt.net_config.input_hw)
                  for c in ids])
    return model.predict_proba(ckpt.net_config, ckpt.params, x), store.labels(ids)


GRID_CELLS = ((False, False), (True, False), (False, True), (True, True))


def run_ablation_grid(
    cfg: TrainConfig,
    net_config: model.NetworkConfig,
    store: data.CaseStore,
    split: data.FoldSplit,
    bootstrap_b: int = 2000,
) -> dict:
    """The 2x2 grid {gate off/on} x {virtual off/on}: per-fold holdout AUC
    with BCa 95% intervals plus the fold-averaged AUC per cell. The same
    seed drives every cell."""
    rows = []
    for se_on, virt_on in GRID_CELLS:
        cell_cfg = replace(cfg, se_enabled=se_on, virtual_enabled=virt_on)
        folds = []
        for fold in range(split.k):
            ckpt, _ = train_fold(cell_cfg, net_config, store, split, fold)
            proba, y = evaluate_checkpoint(ckpt, store, split, fold)
            res = metrics.auc_bca_ci(
                proba, y, b=bootstrap_b,
                rng=rngs.stream(cfg.seed, rngs.BOOTSTRAP, int(se_on), int(virt_on), fold),
            )
            folds.append({"fold": fold, "auc": res.auc,
                          "ci_low": res.ci_low, "ci_high": res.ci_high,
                          "best_epoch": ckpt.epoch, "val_auc": ckpt.val_auc})
        rows.append({
            "se": se_on,
            "virtual": virt_on,
            "folds": folds,
            "averaged_auc": float(np.mean([f["auc"] for f in folds])),
        })
    return {"cells": rows, "k": split.k, "n_test": len(split.holdout)}


def format_ablation_table(report: dict) -> str:
    """Human-readable grid, one row per cell, bracketed intervals."""
    k = report["k"]
    mark = {True: "on ", False: "off"}
    head = ["Gate  Virt  " + "  ".join(f"Fold-{i + 1}                    " for i in range(k))
            + "Averaged"]
    lines = head
    for row in report["cells"]:
        cells = "  ".join(
            f"{f['auc']:.4f} [{f['ci_low']:.4f}, {f['ci_high']:.4f}]" for f in row["folds"]
        )
        lines.append(f"{mark[row['se']]}   {mark[row['virtual']]}   {cells}  {row['averaged_auc']:.4f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Checkpoint files: SVOL tensor stack + JSON sidecar
# ---------------------------------------------------------------------------


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    """Tensors in canonical order in one SVOL stack; names, config and
    provenance in `<path>.json`. Round-trips bit-exactly."""
    path = Path(path)
    flat = ckpt.params.as_dict()
    data.svol_write_stack(path, list(flat.values()))
    sidecar = {
        "tensors": list(flat.keys()),
        "network": asdict(ckpt.net_config),
        "epoch": ckpt.epoch,
        "val_auc": ckpt.val_auc,
        "config_hash": ckpt.config_hash,
        "dataset_hash": ckpt.dataset_hash,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    sidecar_path = path.with_suffix(path.suffix + ".json")
    if not sidecar_path.exists():
        raise DataError(f"checkpoint sidecar missing: {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    net = model.NetworkConfig(**sidecar["network"])
    arrays = data.svol_read_stack(path)
    names = sidecar["tensors"]
    if len(arrays) != len(names):
        raise DataError(f"checkpoint has {len(arrays)} tensors, sidecar lists {len(names)}")
    tensors = dict(zip(names, arrays))
    se = None
    if net.se_enabled:
        se = model.SeParams(w1=tensors["se.w1"], b1=tensors["se.b1"],
                            w2=tensors["se.w2"], b2=tensors["se.b2"])
    params = model.ParamSet(
        conv1=ops.ConvKernel(tensors["conv1.weights"], tensors["conv1.bias"], 1),
        se=se,
        conv2=ops.ConvKernel(tensors["conv2.weights"], tensors["conv2.bias"], 2),
        conv3=ops.ConvKernel(tensors["conv3.weights"], tensors["conv3.bias"], 2),
        head_w=tensors["head.w"],
        head_b=tensors["head.b"],
    )
    return Checkpoint(params=params, net_config=net, epoch=int(sidecar["epoch"]),
                      val_auc=float(sidecar["val_auc"]),
                      config_hash=sidecar.get("config_hash", ""),
                      dataset_hash=sidecar.get("dataset_hash", ""))
