"""Dataset container and file format.

Observations are stored as palette indices (one byte per pixel) because the
renderer emits exactly three shades; decoding reproduces the rendered floats
bit for bit, so stored training data and live rollouts see identical inputs.

File layout (integers little-endian):
    magic   8 bytes  b"SFDS0001"
    u32     header length
    header  canonical JSON: version, camera config, track/driver ids, dt,
            count, image size, encoding, palette, episode starts, meta
    blob    count*H*W bytes of palette indices,
            then count*6 float64 (speed, steering, throttle, brake,
            target_speed, timestamp),
            then count bytes of section tags

A sidecar "<file>.manifest.json" records the digest and per-section counts
for humans; the binary file alone is authoritative.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

import numpy as np

from ..autodiff.serialize import canonical_json, digest_bytes
from ..errors import DataError
from ..simcore import PALETTE, ActionTriple, CameraConfig

MAGIC = b"SFDS0001"

# scalar column order, frozen
COL_SPEED = 0
COL_STEERING = 1
COL_THROTTLE = 2
COL_BRAKE = 3
COL_TARGET_SPEED = 4
COL_TIMESTAMP = 5
NUM_COLS = 6

_PALETTE_ARR = np.asarray(PALETTE, dtype=np.float64)


def encode_image(img: np.ndarray) -> np.ndarray:
    """Float observation -> uint8 palette indices; rejects non-palette pixels."""
    img = np.asarray(img, dtype=np.float64)
    idx = np.searchsorted(_PALETTE_ARR, img.ravel())
    idx = np.clip(idx, 0, len(_PALETTE_ARR) - 1)
    if not np.array_equal(_PALETTE_ARR[idx].reshape(img.shape), img):
        raise DataError("observation contains values outside the render palette")
    return idx.astype(np.uint8).reshape(img.shape)


def decode_image(idx: np.ndarray) -> np.ndarray:
    return _PALETTE_ARR[np.asarray(idx, dtype=np.uint8)]


@dataclass(frozen=True)
class Sample:
    observation: np.ndarray     # float64 (H, W)
    speed: float                # v^c at capture
    action: ActionTriple        # the (clean) label A_t
    target_speed: float         # the driver's declared V^g
    timestamp: float
    section: int


@dataclass
class Dataset:
    camera: CameraConfig
    track: str
    driver: str
    dt: float
    images: np.ndarray          # (N, H, W) uint8 palette indices
    scalars: np.ndarray         # (N, 6) float64, column order above
    sections: np.ndarray        # (N,) uint8
    episode_starts: List[int] = field(default_factory=lambda: [0])
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.scalars = np.ascontiguousarray(self.scalars, dtype=np.float64)
        self.sections = np.ascontiguousarray(self.sections, dtype=np.uint8)
        n = self.images.shape[0]
        if n < 1:
            raise DataError("dataset must contain at least one sample")
        if self.scalars.shape != (n, NUM_COLS) or self.sections.shape != (n,):
            raise DataError(
                f"dataset arrays disagree: {self.images.shape[0]} images, "
                f"{self.scalars.shape} scalars, {self.sections.shape} sections")
        if self.images.shape[1:] != (self.camera.height, self.camera.width):
            raise DataError(
                f"image size {self.images.shape[1:]} does not match camera "
                f"config {(self.camera.height, self.camera.width)}")
        steering = self.scalars[:, COL_STEERING]
        if (np.abs(steering) > 1.0).any():
            raise DataError("steering labels outside [-1, 1]")
        tb = self.scalars[:, (COL_THROTTLE, COL_BRAKE)]
        if (tb < 0.0).any() or (tb > 1.0).any():
            raise DataError("throttle/brake labels outside [0, 1]")
        if (self.scalars[:, COL_TARGET_SPEED] <= 0.0).any():
            raise DataError("every sample must carry a positive target speed")

    # -- accessors ----------------------------------------------------------

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def speeds(self) -> np.ndarray:
        return self.scalars[:, COL_SPEED]

    @property
    def actions(self) -> np.ndarray:
        return self.scalars[:, COL_STEERING:COL_BRAKE + 1]

    @property
    def target_speeds(self) -> np.ndarray:
        return self.scalars[:, COL_TARGET_SPEED]

    @property
    def timestamps(self) -> np.ndarray:
        return self.scalars[:, COL_TIMESTAMP]

    def observations(self, idx) -> np.ndarray:
        """Decoded float64 observations for an index array: (len(idx), H, W)."""
        return decode_image(self.images[idx])

    def sample(self, i: int) -> Sample:
        row = self.scalars[i]
        return Sample(observation=decode_image(self.images[i]),
                      speed=float(row[COL_SPEED]),
                      action=ActionTriple(steering=float(row[COL_STEERING]),
                                          throttle=float(row[COL_THROTTLE]),
                                          brake=float(row[COL_BRAKE])),
                      target_speed=float(row[COL_TARGET_SPEED]),
                      timestamp=float(row[COL_TIMESTAMP]),
                      section=int(self.sections[i]))

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self.sample(i)

    # -- serialization ------------------------------------------------------

    def header_dict(self) -> dict:
        return {
            "version": 1,
            "camera": self.camera.to_dict(),
            "track": self.track,
            "driver": self.driver,
            "dt": self.dt,
            "count": len(self),
            "image_height": int(self.images.shape[1]),
            "image_width": int(self.images.shape[2]),
            "encoding": "palette-v1",
            "palette": list(PALETTE),
            "episode_starts": [int(i) for i in self.episode_starts],
            "meta": self.meta,
        }

    def pack(self) -> bytes:
        header = canonical_json(self.header_dict()).encode("utf-8")
        return b"".join([
            MAGIC, struct.pack("<I", len(header)), header,
            self.images.tobytes(),
            np.ascontiguousarray(self.scalars, dtype="<f8").tobytes(),
            self.sections.tobytes(),
        ])

    def digest(self) -> str:
        return digest_bytes(self.pack())

    def manifest(self) -> dict:
        unique, counts = np.unique(self.sections, return_counts=True)
        return {
            "digest": self.digest(),
            "count": len(self),
            "driver": self.driver,
            "track": self.track,
            "dt": self.dt,
            "episodes": len(self.episode_starts),
            "section_counts": {int(u): int(c) for u, c in zip(unique, counts)},
            "target_speeds": sorted(set(float(v) for v in self.target_speeds)),
            "meta": self.meta,
        }


def unpack_dataset(data: bytes) -> Dataset:
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise DataError("not a styleforge dataset (bad magic)")
    (header_len,) = struct.unpack_from("<I", data, len(MAGIC))
    start = len(MAGIC) + 4
    try:
        header = json.loads(data[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt dataset header: {exc}") from exc
    if header.get("version") != 1:
        raise DataError(f"unsupported dataset version: {header.get('version')}")
    if header.get("encoding") != "palette-v1":
        raise DataError(f"unsupported image encoding: {header.get('encoding')!r}")
    n = int(header["count"])
    h = int(header["image_height"])
    w = int(header["image_width"])
    pos = start + header_len
    img_bytes = n * h * w
    sc_bytes = n * NUM_COLS * 8
    if len(data) != pos + img_bytes + sc_bytes + n:
        raise DataError(f"dataset payload length mismatch: have {len(data) - pos} "
                        f"bytes, expected {img_bytes + sc_bytes + n}")
    images = np.frombuffer(data[pos:pos + img_bytes], dtype=np.uint8).reshape(n, h, w)
    pos += img_bytes
    scalars = np.frombuffer(data[pos:pos + sc_bytes], dtype="<f8").astype(
        np.float64).reshape(n, NUM_COLS)
    pos += sc_bytes
    sections = np.frombuffer(data[pos:pos + n], dtype=np.uint8)
    return Dataset(camera=CameraConfig.from_dict(header["camera"]),
                   track=header["track"], driver=header["driver"],
                   dt=float(header["dt"]),
                   images=images.copy(), scalars=scalars, sections=sections.copy(),
                   episode_starts=[int(i) for i in header["episode_starts"]],
                   meta=header.get("meta", {}))


def save_dataset(dataset: Dataset, path):
    path = Path(path)
    path.write_bytes(dataset.pack())
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(dataset.manifest(), indent=2,
                                        sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    return unpack_dataset(Path(path).read_bytes())


def concat_datasets(parts: Sequence[Dataset], driver: Optional[str] = None) -> Dataset:
    if not parts:
        raise DataError("cannot concatenate zero datasets")
    head = parts[0]
    for p in parts[1:]:
        if p.camera != head.camera or p.dt != head.dt:
            raise DataError("datasets disagree on camera config or dt")
    episode_starts = []
    offset = 0
    for p in parts:
        episode_starts.extend(offset + i for i in p.episode_starts)
        offset += len(p)
    return Dataset(camera=head.camera,
                   track="+".join(dict.fromkeys(p.track for p in parts)),
                   driver=driver or "+".join(dict.fromkeys(p.driver for p in parts)),
                   dt=head.dt,
                   images=np.concatenate([p.images for p in parts]),
                   scalars=np.concatenate([p.scalars for p in parts]),
                   sections=np.concatenate([p.sections for p in parts]),
                   episode_starts=episode_starts,
                   meta={"parts": [p.manifest()["digest"] for p in parts]})
