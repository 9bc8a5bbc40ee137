"""Helpers to persist result tables, JSON documents and the cell layout on disk."""

from __future__ import annotations

import json
from os import PathLike
from pathlib import Path
from typing import Any

import geopandas as gpd
import numpy as np
import pandas as pd

from ..network.geometry import CouplingGains, NetworkLayout


def _ensure_path(path: Path | str | PathLike[str]) -> Path:
    """Return ``path`` as :class:`pathlib.Path` enforcing valid types."""

    if isinstance(path, Path):
        return path
    if isinstance(path, (str, PathLike)):
        return Path(path)
    raise TypeError("path must be a string, Path or os.PathLike instance")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"object of type {type(value).__name__} is not JSON serialisable")


def save_dataframe(df: pd.DataFrame, path: Path | str | PathLike[str]) -> Path:
    """Persist a dataframe to CSV ensuring the parent directory exists.

    Floats use the shortest repr that round-trips, so a re-read restores them exactly.
    """

    target = _ensure_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(target, index=False, lineterminator="\n")
    return target


def read_dataframe(path: Path | str | PathLike[str]) -> pd.DataFrame:
    return pd.read_csv(_ensure_path(path), float_precision="round_trip")


def save_json(data: Any, path: Path | str | PathLike[str]) -> Path:
    """Write ``data`` as indented JSON with sorted keys."""

    target = _ensure_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True, default=_json_default)
    target.write_text(text + "\n", encoding="utf-8")
    return target


def read_json(path: Path | str | PathLike[str]) -> Any:
    return json.loads(_ensure_path(path).read_text(encoding="utf-8"))


def layout_frame(layout: NetworkLayout, gains: CouplingGains | None = None) -> gpd.GeoDataFrame:
    """One hexagon per cell with its index, centre and (optionally) coupling statistics."""

    records: dict[str, list[Any]] = {
        "cell": list(range(layout.num_cells)),
        "center_x": [float(x) for x in layout.cell_centers[:, 0]],
        "center_y": [float(y) for y in layout.cell_centers[:, 1]],
    }
    if gains is not None:
        records["g_own"] = [float(value) for value in gains.g_own]
        records["g_cross_sum"] = [float(value) for value in gains.g_cross.sum(axis=1)]
    geometry = [layout.hexagon(cell) for cell in range(layout.num_cells)]
    return gpd.GeoDataFrame(records, geometry=geometry)


def save_layout(
    layout: NetworkLayout,
    path: Path | str | PathLike[str],
    gains: CouplingGains | None = None,
) -> Path:
    """Persist the cell hexagons as a GeoJSON FeatureCollection (local metres, no CRS)."""

    target = _ensure_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(layout_frame(layout, gains).to_json(), encoding="utf-8")
    return target


def read_layout(path: Path | str | PathLike[str]) -> gpd.GeoDataFrame:
    return gpd.read_file(_ensure_path(path))


def save_coupling(layout: NetworkLayout, gains: CouplingGains, path: Path | str | PathLike[str]) -> Path:
    """Write cell centres, ``G_cc`` and ``G_cd`` as one JSON document."""

    return save_json({"layout": layout.to_dict(), "gains": gains.to_dict()}, path)


__all__ = [
    "layout_frame",
    "read_dataframe",
    "read_json",
    "read_layout",
    "save_coupling",
    "save_dataframe",
    "save_json",
    "save_layout",
]
