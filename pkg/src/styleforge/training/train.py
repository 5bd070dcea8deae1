"""Two-stage training.

Step 0 (train_bdm): behavioral cloning of the mixed dataset into the vision
policy. Step 2 (train_pb): the per-driver adapter is fit against the driver's
actions while the base model only supplies eval-mode inputs (its action and
feature tap, precomputed once per dataset); base weights are verified
byte-identical before and after.

Everything stochastic draws from named counter-based streams of the config
seed, so a (dataset digest, seed) pair fully determines the trained weights.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .. import autodiff as ad
from ..errors import ConfigurationError, TrainingError
from ..models import (BdmConfig, BdmModel, PbConfig, PbModel, bdm_forward,
                      bdm_graph, check_pair, pb_graph, weights_digest)
from .dataset import Dataset


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0
    val_fraction: float = 0.1
    shuffle: bool = True
    patience: int = 5

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if not 0.0 <= self.val_fraction < 0.5:
            raise ConfigurationError("val_fraction must be in [0, 0.5)")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return TrainConfig(**d)


@dataclass
class TrainResult:
    model: object
    train_losses: List[float] = field(default_factory=list)
    val_losses: List[float] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0


def split_indices(digest: str, seed: int, n: int,
                  val_fraction: float) -> Tuple[np.ndarray, np.ndarray]:
    """Deterministic train/val split keyed by (dataset digest, seed)."""
    rng = ad.philox_stream(seed, ad.STREAM_SPLIT, int(digest[:16], 16))
    perm = rng.permutation(n)
    n_val = int(n * val_fraction)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _epoch_order(train_idx: np.ndarray, seed: int, epoch: int,
                 shuffle: bool) -> np.ndarray:
    if not shuffle:
        return train_idx
    rng = ad.philox_stream(seed, ad.STREAM_SHUFFLE, epoch)
    return train_idx[rng.permutation(len(train_idx))]


def _fit(model, params: Dict[str, ad.Parameter], config: TrainConfig,
         n: int, digest: str, train_batch_fn, val_loss_fn) -> TrainResult:
    """Generic epoch loop: batch closure does fwd+bwd and returns the loss."""
    train_idx, val_idx = split_indices(digest, config.seed, n, config.val_fraction)
    if len(train_idx) == 0:
        raise TrainingError("no training samples after the validation split")
    state = ad.AdamState()
    result = TrainResult(model=model)
    best_loss = np.inf
    best_weights: Dict[str, np.ndarray] = {}
    since_best = 0
    for epoch in range(config.epochs):
        order = _epoch_order(train_idx, config.seed, epoch, config.shuffle)
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            ad.zero_grads(params)
            loss = train_batch_fn(idx, epoch)
            ad.adam_step(params, state, lr=config.learning_rate,
                         beta1=config.beta1, beta2=config.beta2)
            total += loss * len(idx)
        train_loss = total / len(order)
        if not np.isfinite(train_loss):
            raise TrainingError(f"training loss diverged at epoch {epoch}")
        result.train_losses.append(float(train_loss))
        monitored = train_loss
        if len(val_idx):
            val_loss = val_loss_fn(val_idx)
            result.val_losses.append(float(val_loss))
            monitored = val_loss
        result.epochs_run = epoch + 1
        if monitored < best_loss:
            best_loss = monitored
            result.best_epoch = epoch
            best_weights = {k: p.value.copy() for k, p in params.items()
                            if p.trainable}
            since_best = 0
        else:
            since_best += 1
            if since_best > config.patience:
                break
    for k, w in best_weights.items():
        params[k].value = w
    return result


# -- Step 0: base model ------------------------------------------------------

def _bdm_batch_arrays(dataset: Dataset, idx: np.ndarray, scale: float):
    images = dataset.observations(idx)[:, None, :, :]
    speeds = dataset.speeds[idx][:, None] / scale
    targets = dataset.actions[idx]
    return images, speeds, targets


def bdm_dataset_loss(model: BdmModel, dataset: Dataset,
                     indices: Optional[np.ndarray] = None,
                     batch_size: int = 256) -> float:
    """Eval-mode mean squared action-prediction error over the given rows."""
    idx = np.arange(len(dataset)) if indices is None else indices
    total = 0.0
    for start in range(0, len(idx), batch_size):
        part = idx[start:start + batch_size]
        pred, _ = bdm_forward(model, dataset.observations(part),
                              dataset.speeds[part])
        total += float(np.mean((pred - dataset.actions[part]) ** 2)) * len(part)
    return total / len(idx)


def train_bdm(dataset: Dataset, config: TrainConfig,
              model_config: Optional[BdmConfig] = None) -> TrainResult:
    model_config = model_config or BdmConfig()
    if (dataset.camera.height, dataset.camera.width) != (
            model_config.image_height, model_config.image_width):
        raise ConfigurationError(
            f"dataset images {dataset.camera.height}x{dataset.camera.width} do not "
            f"match model config {model_config.image_height}x{model_config.image_width}")
    model = BdmModel.initialize(model_config, config.seed)
    digest = dataset.digest()
    scale = model_config.speed_scale

    def train_batch(idx: np.ndarray, epoch: int) -> float:
        images, speeds, targets = _bdm_batch_arrays(dataset, idx, scale)
        tape = ad.Tape()
        out, _ = bdm_graph(tape, model,
                           ad.Var(images, requires_grad=False),
                           ad.Var(speeds, requires_grad=False))
        loss = ad.mse_loss(tape, out, ad.Var(targets, requires_grad=False))
        ad.backward(tape, loss)
        value = float(loss.value)
        tape.release()
        return value

    def val_loss(val_idx: np.ndarray) -> float:
        return bdm_dataset_loss(model, dataset, val_idx)

    result = _fit(model, model.params, config, len(dataset), digest,
                  train_batch, val_loss)
    model.meta.update({
        "trained": True,
        "dataset_digest": digest,
        "seed": config.seed,
        "epochs_run": result.epochs_run,
        "best_epoch": result.best_epoch,
        "train_config": config.to_dict(),
        "final_train_loss": result.train_losses[-1],
        "final_val_loss": result.val_losses[-1] if result.val_losses else None,
    })
    return result


# -- Step 2: per-driver adapter ---------------------------------------------

def precompute_bdm_outputs(bdm: BdmModel, dataset: Dataset,
                           batch_size: int = 256) -> Tuple[np.ndarray, np.ndarray]:
    """Eval-mode base actions and features for every sample, in dataset order."""
    n = len(dataset)
    actions = np.empty((n, 3))
    features = np.empty((n, bdm.config.phi_length()))
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        obs = dataset.observations(idx)
        a, f = bdm_forward(bdm, obs, dataset.speeds[idx])
        actions[idx] = a
        features[idx] = f
    return actions, features


def _pb_batch_arrays(dataset: Dataset, pre: Tuple[np.ndarray, np.ndarray],
                     idx: np.ndarray, scale: float):
    actions, features = pre
    a = actions[idx]
    f = features[idx]
    v = dataset.speeds[idx][:, None] / scale
    gap = (dataset.target_speeds[idx] - dataset.speeds[idx])[:, None] / scale
    y = dataset.actions[idx]
    return a, f, v, gap, y


def pb_dataset_loss(pb: PbModel, bdm: BdmModel, dataset: Dataset,
                    indices: Optional[np.ndarray] = None,
                    precomputed: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                    batch_size: int = 512) -> float:
    """Eval-mode adapter loss against a driver dataset."""
    check_pair(bdm, pb)
    pre = precomputed if precomputed is not None else precompute_bdm_outputs(bdm, dataset)
    idx = np.arange(len(dataset)) if indices is None else indices
    total = 0.0
    for start in range(0, len(idx), batch_size):
        part = idx[start:start + batch_size]
        a, f, v, gap, y = _pb_batch_arrays(dataset, pre, part, pb.config.speed_scale)
        tape = ad.Tape()
        out = pb_graph(tape, pb,
                       ad.Var(a, requires_grad=False),
                       ad.Var(f, requires_grad=False),
                       ad.Var(v, requires_grad=False),
                       ad.Var(gap, requires_grad=False), mode="eval")
        total += float(np.mean((out.value - y) ** 2)) * len(part)
        tape.release()
    return total / len(idx)


def train_pb(dataset: Dataset, bdm: BdmModel, config: TrainConfig,
             pb_config: Optional[PbConfig] = None,
             precomputed: Optional[Tuple[np.ndarray, np.ndarray]] = None
             ) -> TrainResult:
    if not bdm.trained:
        raise TrainingError(
            "refusing to train an adapter against an untrained base model; "
            "train the base model first (Step 0)")
    pb_config = pb_config or PbConfig(feature_length=bdm.config.phi_length(),
                                      speed_scale=bdm.config.speed_scale)
    pb = PbModel.initialize(pb_config, config.seed)
    check_pair(bdm, pb)
    frozen_before = weights_digest(bdm)
    pre = precomputed if precomputed is not None else precompute_bdm_outputs(bdm, dataset)
    if pre[0].shape[0] != len(dataset) or pre[1].shape[1] != pb_config.feature_length:
        raise ConfigurationError("precomputed base outputs do not match the dataset")
    digest = dataset.digest()
    scale = pb_config.speed_scale

    def train_batch(idx: np.ndarray, epoch: int) -> float:
        a, f, v, gap, y = _pb_batch_arrays(dataset, pre, idx, scale)
        rng = ad.philox_stream(config.seed, ad.STREAM_DROPOUT, epoch,
                               int(idx[0]) if len(idx) else 0)
        tape = ad.Tape()
        out = pb_graph(tape, pb,
                       ad.Var(a, requires_grad=False),
                       ad.Var(f, requires_grad=False),
                       ad.Var(v, requires_grad=False),
                       ad.Var(gap, requires_grad=False),
                       mode="train", rng=rng)
        loss = ad.mse_loss(tape, out, ad.Var(y, requires_grad=False))
        ad.backward(tape, loss)
        value = float(loss.value)
        tape.release()
        return value

    def val_loss(val_idx: np.ndarray) -> float:
        return pb_dataset_loss(pb, bdm, dataset, val_idx, precomputed=pre)

    result = _fit(pb, pb.params, config, len(dataset), digest,
                  train_batch, val_loss)
    if weights_digest(bdm) != frozen_before:
        raise TrainingError("base model weights changed during adapter training")
    pb.meta.update({
        "trained": True,
        "dataset_digest": digest,
        "bdm_digest": frozen_before,
        "driver": dataset.driver,
        "seed": config.seed,
        "epochs_run": result.epochs_run,
        "best_epoch": result.best_epoch,
        "train_config": config.to_dict(),
        "final_train_loss": result.train_losses[-1],
        "final_val_loss": result.val_losses[-1] if result.val_losses else None,
    })
    return result
