"""Dataset pipeline and the two-stage training procedure."""

from .collect import (DEFAULT_DT, DEFAULT_TARGET_SPEEDS, CollectReport,
                      EpisodePlan, collect, collect_mixed, collect_preset)
from .dataset import (COL_BRAKE, COL_SPEED, COL_STEERING, COL_TARGET_SPEED,
                      COL_THROTTLE, COL_TIMESTAMP, Dataset, Sample,
                      concat_datasets, decode_image, encode_image, load_dataset,
                      save_dataset, unpack_dataset)
from .train import (TrainConfig, TrainResult, bdm_dataset_loss, pb_dataset_loss,
                    precompute_bdm_outputs, split_indices, train_bdm, train_pb)

__all__ = [
    "DEFAULT_DT", "DEFAULT_TARGET_SPEEDS", "CollectReport", "EpisodePlan",
    "collect", "collect_mixed", "collect_preset",
    "COL_BRAKE", "COL_SPEED", "COL_STEERING", "COL_TARGET_SPEED",
    "COL_THROTTLE", "COL_TIMESTAMP", "Dataset", "Sample", "concat_datasets",
    "decode_image", "encode_image", "load_dataset", "save_dataset",
    "unpack_dataset",
    "TrainConfig", "TrainResult", "bdm_dataset_loss", "pb_dataset_loss",
    "precompute_bdm_outputs", "split_indices", "train_bdm", "train_pb",
]
