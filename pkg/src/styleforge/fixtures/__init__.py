"""Accessors for the data files that ship with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..simcore import TrackGeometry, build_track, load_track
from ..styledriver import StylePreset, load_preset


def _fixture_path(*parts: str) -> Path:
    root = resources.files(__package__)
    path = root.joinpath(*parts)
    return Path(str(path))


def fixture_track_path(name: str) -> Path:
    path = _fixture_path("tracks", f"{name}.track")
    if not path.is_file():
        raise FileNotFoundError(f"no fixture track named {name!r}")
    return path


def fixture_track(name: str) -> TrackGeometry:
    return build_track(load_track(fixture_track_path(name)))


def fixture_config_path(name: str) -> Path:
    path = _fixture_path("configs", f"{name}.json")
    if not path.is_file():
        raise FileNotFoundError(f"no fixture config named {name!r}")
    return path


def fixture_preset_path(name: str) -> Path:
    path = _fixture_path("presets", f"style_{name.lower()}.preset")
    if not path.is_file():
        raise FileNotFoundError(f"no fixture preset named {name!r}")
    return path


def fixture_preset(name: str) -> StylePreset:
    return load_preset(fixture_preset_path(name))
