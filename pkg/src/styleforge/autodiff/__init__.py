"""Minimal reverse-mode autodiff engine: graph, ops, rng streams, Adam, io."""

from .graph import Parameter, Tape, Var, backward, collect_grads, zero_grads
from .ops import (concat, constant, conv2d, dense, dropout, flatten, mse_loss,
                  relu, squash_actions, sum_all)
from .optim import AdamState, adam_step
from .rng import (STREAM_BDM_INIT, STREAM_DROPOUT, STREAM_EPISODE, STREAM_NOISE,
                  STREAM_PB_INIT, STREAM_SHUFFLE, STREAM_SPLIT, philox_stream,
                  stream_key)
from .serialize import (canonical_json, config_digest, digest_bytes, digest_file,
                        load_weights, pack_weights, save_weights, unpack_weights)

__all__ = [
    "Parameter", "Tape", "Var", "backward", "collect_grads", "zero_grads",
    "concat", "constant", "conv2d", "dense", "dropout", "flatten", "mse_loss",
    "relu", "squash_actions", "sum_all",
    "AdamState", "adam_step",
    "STREAM_BDM_INIT", "STREAM_DROPOUT", "STREAM_EPISODE", "STREAM_NOISE",
    "STREAM_PB_INIT", "STREAM_SHUFFLE", "STREAM_SPLIT", "philox_stream",
    "stream_key",
    "canonical_json", "config_digest", "digest_bytes", "digest_file",
    "load_weights", "pack_weights", "save_weights", "unpack_weights",
]
