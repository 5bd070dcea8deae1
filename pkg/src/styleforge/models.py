"""The two networks and their composition.

- BdmModel: vision policy (image, current speed) -> action. Five conv layers
  then three dense layers; the flattened conv outputs of layers 3 and 5
  (post-activation) form the road-feature vector φ that the adapter consumes.
- PbModel: per-driver adapter. Four embedded inputs — the BDM's action, φ,
  current speed, and the gap to the declared target speed — fused through a
  small dense head with dropout.
- ndst_forward: the composed policy; with no adapter installed it returns the
  BDM action bit for bit, so installing/removing an adapter never perturbs
  the base system.

All speeds entering a network are normalized by config.speed_scale.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from . import autodiff as ad
from .errors import ConfigurationError, DimensionError
from .simcore import ActionTriple


# -- configs ----------------------------------------------------------------

@dataclass(frozen=True)
class BdmConfig:
    image_height: int = 64
    image_width: int = 64
    conv_channels: Tuple[int, ...] = (24, 36, 48, 64, 64)
    conv_kernels: Tuple[int, ...] = (5, 5, 5, 3, 3)
    conv_strides: Tuple[int, ...] = (2, 2, 2, 1, 1)
    dense_sizes: Tuple[int, ...] = (100, 50)
    output_dim: int = 3
    feature_taps: Tuple[int, ...] = (2, 4)   # 0-based conv layer indices for φ
    speed_scale: float = 30.0

    def __post_init__(self):
        if not (len(self.conv_channels) == len(self.conv_kernels)
                == len(self.conv_strides) == 5):
            raise ConfigurationError("BDM requires exactly 5 conv layers")
        if len(self.dense_sizes) != 2 or self.output_dim != 3:
            raise ConfigurationError("BDM head must be dense(h1) dense(h2) dense(3)")
        for t in self.feature_taps:
            if not 0 <= t < 5:
                raise ConfigurationError(f"feature tap {t} out of range")
        self.conv_shapes()  # raises if the stack does not fit the image

    def conv_shapes(self) -> Tuple[Tuple[int, int, int], ...]:
        """(channels, height, width) after each conv layer, valid convolution."""
        h, w = self.image_height, self.image_width
        shapes = []
        for c, k, s in zip(self.conv_channels, self.conv_kernels, self.conv_strides):
            h = (h - k) // s + 1
            w = (w - k) // s + 1
            if (self.image_height - 0) < k or h < 1 or w < 1:
                raise ConfigurationError(
                    f"conv stack does not fit a {self.image_height}x{self.image_width} "
                    f"image: layer with kernel {k} stride {s} would output {h}x{w}")
            shapes.append((c, h, w))
        return tuple(shapes)

    def phi_length(self) -> int:
        shapes = self.conv_shapes()
        return sum(int(np.prod(shapes[t])) for t in self.feature_taps)

    def to_dict(self) -> dict:
        return {"kind": "bdm", **asdict(self)}

    @staticmethod
    def from_dict(d: dict) -> "BdmConfig":
        d = {k: v for k, v in d.items() if k != "kind"}
        for key in ("conv_channels", "conv_kernels", "conv_strides",
                    "dense_sizes", "feature_taps"):
            d[key] = tuple(d[key])
        return BdmConfig(**d)


@dataclass(frozen=True)
class PbConfig:
    feature_length: int = 1264
    action_embed: int = 16
    feature_embed: int = 64
    speed_embed: int = 16
    gap_embed: int = 16
    fusion_sizes: Tuple[int, ...] = (128, 64)
    output_dim: int = 3
    dropout_rate: float = 0.5
    speed_scale: float = 30.0

    def __post_init__(self):
        if len(self.fusion_sizes) != 2 or self.output_dim != 3:
            raise ConfigurationError("PB fusion must be dense(f1) dropout dense(f2) dense(3)")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError("dropout_rate must be in [0,1)")

    @property
    def fused_width(self) -> int:
        return (self.action_embed + self.feature_embed
                + self.speed_embed + self.gap_embed)

    def to_dict(self) -> dict:
        return {"kind": "pb", **asdict(self)}

    @staticmethod
    def from_dict(d: dict) -> "PbConfig":
        d = {k: v for k, v in d.items() if k != "kind"}
        d["fusion_sizes"] = tuple(d["fusion_sizes"])
        return PbConfig(**d)


# -- models -----------------------------------------------------------------

def _he_dense(rng: np.random.Generator, out_n: int, in_n: int, head: bool) -> np.ndarray:
    std = np.sqrt((1.0 if head else 2.0) / in_n)
    return rng.normal(0.0, std, size=(out_n, in_n))


@dataclass
class BdmModel:
    config: BdmConfig
    params: Dict[str, ad.Parameter]
    meta: dict = field(default_factory=dict)

    @staticmethod
    def initialize(config: BdmConfig, seed: int) -> "BdmModel":
        rng = ad.philox_stream(seed, ad.STREAM_BDM_INIT)
        params: Dict[str, ad.Parameter] = {}
        in_c = 1
        for i, (c, k, s) in enumerate(zip(config.conv_channels, config.conv_kernels,
                                          config.conv_strides), start=1):
            fan_in = in_c * k * k
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(c, in_c, k, k))
            params[f"conv{i}.w"] = ad.Parameter(f"conv{i}.w", w)
            params[f"conv{i}.b"] = ad.Parameter(f"conv{i}.b", np.zeros(c))
            in_c = c
        flat = int(np.prod(config.conv_shapes()[-1]))
        widths = [flat + 1, *config.dense_sizes, config.output_dim]
        names = ["dense1", "dense2", "head"]
        for name, n_in, n_out in zip(names, widths[:-1], widths[1:]):
            params[f"{name}.w"] = ad.Parameter(
                f"{name}.w", _he_dense(rng, n_out, n_in, head=name == "head"))
            params[f"{name}.b"] = ad.Parameter(f"{name}.b", np.zeros(n_out))
        return BdmModel(config=config, params=params,
                        meta={"trained": False, "init_seed": int(seed)})

    @property
    def trained(self) -> bool:
        return bool(self.meta.get("trained", False))


@dataclass
class PbModel:
    config: PbConfig
    params: Dict[str, ad.Parameter]
    meta: dict = field(default_factory=dict)

    @staticmethod
    def initialize(config: PbConfig, seed: int) -> "PbModel":
        rng = ad.philox_stream(seed, ad.STREAM_PB_INIT)
        params: Dict[str, ad.Parameter] = {}
        branches = [("emb_action", config.action_embed, 3),
                    ("emb_feat", config.feature_embed, config.feature_length),
                    ("emb_speed", config.speed_embed, 1),
                    ("emb_gap", config.gap_embed, 1)]
        for name, n_out, n_in in branches:
            params[f"{name}.w"] = ad.Parameter(f"{name}.w", _he_dense(rng, n_out, n_in, head=False))
            params[f"{name}.b"] = ad.Parameter(f"{name}.b", np.zeros(n_out))
        widths = [config.fused_width, *config.fusion_sizes, config.output_dim]
        names = ["fuse1", "fuse2", "head"]
        for name, n_in, n_out in zip(names, widths[:-1], widths[1:]):
            params[f"{name}.w"] = ad.Parameter(
                f"{name}.w", _he_dense(rng, n_out, n_in, head=name == "head"))
            params[f"{name}.b"] = ad.Parameter(f"{name}.b", np.zeros(n_out))
        return PbModel(config=config, params=params,
                       meta={"trained": False, "init_seed": int(seed)})

    @property
    def trained(self) -> bool:
        return bool(self.meta.get("trained", False))


# -- graph builders (shared by inference and training) ----------------------

def bdm_graph(tape: ad.Tape, model: BdmModel, images: ad.Var,
              norm_speed: ad.Var) -> Tuple[ad.Var, ad.Var]:
    """images: (B,1,H,W) Var; norm_speed: (B,1) Var already divided by
    speed_scale. Returns (action (B,3), features (B,phi))."""
    p = model.params
    h = images
    taps = []
    for i, stride in enumerate(model.config.conv_strides, start=1):
        h = ad.conv2d(tape, h, p[f"conv{i}.w"], p[f"conv{i}.b"], stride)
        h = ad.relu(tape, h)
        if (i - 1) in model.config.feature_taps:
            taps.append(ad.flatten(tape, h))
    features = ad.concat(tape, taps)
    fused = ad.concat(tape, [ad.flatten(tape, h), norm_speed])
    d1 = ad.relu(tape, ad.dense(tape, fused, p["dense1.w"], p["dense1.b"]))
    d2 = ad.relu(tape, ad.dense(tape, d1, p["dense2.w"], p["dense2.b"]))
    raw = ad.dense(tape, d2, p["head.w"], p["head.b"])
    return ad.squash_actions(tape, raw), features


def pb_graph(tape: ad.Tape, model: PbModel, actions: ad.Var, features: ad.Var,
             norm_speed: ad.Var, norm_gap: ad.Var, mode: str = "eval",
             rng: Optional[np.random.Generator] = None) -> ad.Var:
    """All inputs (B,k) Vars, speeds pre-normalized. Returns action (B,3)."""
    if features.value.shape[1] != model.config.feature_length:
        raise DimensionError(
            f"feature length {features.value.shape[1]} does not match "
            f"adapter config {model.config.feature_length}")
    p = model.params
    ea = ad.relu(tape, ad.dense(tape, actions, p["emb_action.w"], p["emb_action.b"]))
    ef = ad.relu(tape, ad.dense(tape, features, p["emb_feat.w"], p["emb_feat.b"]))
    ev = ad.relu(tape, ad.dense(tape, norm_speed, p["emb_speed.w"], p["emb_speed.b"]))
    eg = ad.relu(tape, ad.dense(tape, norm_gap, p["emb_gap.w"], p["emb_gap.b"]))
    fused = ad.concat(tape, [ea, ef, ev, eg])
    f1 = ad.relu(tape, ad.dense(tape, fused, p["fuse1.w"], p["fuse1.b"]))
    f1 = ad.dropout(tape, f1, model.config.dropout_rate, mode, rng)
    f2 = ad.relu(tape, ad.dense(tape, f1, p["fuse2.w"], p["fuse2.b"]))
    raw = ad.dense(tape, f2, p["head.w"], p["head.b"])
    return ad.squash_actions(tape, raw)


# -- inference entry points -------------------------------------------------

def _prep_images(model: BdmModel, obs: np.ndarray) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(obs, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    expect = (model.config.image_height, model.config.image_width)
    if arr.ndim != 3 or arr.shape[1:] != expect:
        raise DimensionError(f"observation shape {np.asarray(obs).shape} does not "
                             f"match configured image {expect}")
    return arr[:, None, :, :], single


def bdm_forward(model: BdmModel, obs: np.ndarray, speed,
                mode: str = "eval") -> Tuple[np.ndarray, np.ndarray]:
    """Eval-mode forward. Single obs (H,W) -> (action (3,), features (phi,));
    batched obs (B,H,W) -> ((B,3), (B,phi)). Deterministic."""
    del mode  # the base network has no stochastic layers
    images, single = _prep_images(model, obs)
    speeds = np.atleast_1d(np.asarray(speed, dtype=np.float64))
    if speeds.shape[0] != images.shape[0]:
        raise DimensionError(f"speed batch {speeds.shape[0]} does not match "
                             f"observation batch {images.shape[0]}")
    tape = ad.Tape()
    img_var = ad.Var(images, requires_grad=False)
    spd_var = ad.Var(speeds[:, None] / model.config.speed_scale, requires_grad=False)
    action, features = bdm_graph(tape, model, img_var, spd_var)
    a_val, f_val = action.value, features.value
    tape.release()
    if single:
        return a_val[0], f_val[0]
    return a_val, f_val


def pb_forward(model: PbModel, bdm_action: np.ndarray, features: np.ndarray,
               speed, speed_gap, mode: str = "eval",
               rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Eval-mode adapter forward; accepts single vectors or batches."""
    a = np.asarray(bdm_action, dtype=np.float64)
    f = np.asarray(features, dtype=np.float64)
    single = a.ndim == 1
    if single:
        a, f = a[None], f[None]
    v = np.atleast_1d(np.asarray(speed, dtype=np.float64))[:, None]
    g = np.atleast_1d(np.asarray(speed_gap, dtype=np.float64))[:, None]
    tape = ad.Tape()
    out = pb_graph(tape, model,
                   ad.Var(a, requires_grad=False),
                   ad.Var(f, requires_grad=False),
                   ad.Var(v / model.config.speed_scale, requires_grad=False),
                   ad.Var(g / model.config.speed_scale, requires_grad=False),
                   mode=mode, rng=rng)
    out_val = out.value
    tape.release()
    return out_val[0] if single else out_val


def check_pair(bdm: BdmModel, pb: PbModel):
    if pb.config.feature_length != bdm.config.phi_length():
        raise ConfigurationError(
            f"adapter expects features of length {pb.config.feature_length} but "
            f"the base model produces {bdm.config.phi_length()}")


def ndst_forward(obs: np.ndarray, speed: float, target_speed: float,
                 bdm: BdmModel, pb: Optional[PbModel] = None) -> ActionTriple:
    """Composed policy. Without an adapter this IS the base policy, bitwise."""
    action, features = bdm_forward(bdm, obs, speed)
    if pb is None:
        return ActionTriple(steering=float(action[0]), throttle=float(action[1]),
                            brake=float(action[2]))
    check_pair(bdm, pb)
    out = pb_forward(pb, action, features, speed, target_speed - speed)
    return ActionTriple(steering=float(out[0]), throttle=float(out[1]),
                        brake=float(out[2]))


def make_policy(bdm: BdmModel, pb: Optional[PbModel] = None,
                target_speed: float = 20.0):
    """Rollout-ready closure (obs, speed) -> ActionTriple."""
    if pb is not None:
        check_pair(bdm, pb)

    def policy(obs: np.ndarray, speed: float) -> ActionTriple:
        return ndst_forward(obs, speed, target_speed, bdm, pb)

    policy.wants_observation = True
    policy.name = "ndst" if pb is not None else "bdm"
    return policy


# -- bundle io --------------------------------------------------------------

def _arrays(model) -> Tuple[Dict[str, np.ndarray], Dict[str, bool]]:
    return ({n: p.value for n, p in model.params.items()},
            {n: p.trainable for n, p in model.params.items()})


def model_bytes(model) -> bytes:
    arrays, trainable = _arrays(model)
    return ad.pack_weights(arrays, trainable, model.config.to_dict(), model.meta)


def model_digest(model) -> str:
    return ad.digest_bytes(model_bytes(model))


def weights_digest(model) -> str:
    """Digest of parameter bytes only (ignores meta); freeze checks use this."""
    arrays, trainable = _arrays(model)
    return ad.digest_bytes(ad.pack_weights(arrays, trainable,
                                           model.config.to_dict(), {}))


def save_model(path, model):
    Path(path).write_bytes(model_bytes(model))


def load_model(path):
    arrays, trainable, config, meta = ad.load_weights(path)
    kind = config.get("kind")
    if kind == "bdm":
        cfg = BdmConfig.from_dict(config)
        model = BdmModel(config=cfg, params={}, meta=meta)
    elif kind == "pb":
        cfg = PbConfig.from_dict(config)
        model = PbModel(config=cfg, params={}, meta=meta)
    else:
        raise ConfigurationError(f"unknown model kind in bundle: {kind!r}")
    model.params = {n: ad.Parameter(n, arr, trainable.get(n, True))
                    for n, arr in arrays.items()}
    return model
