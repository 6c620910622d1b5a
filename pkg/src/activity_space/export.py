"""File formats of the analysis artifacts.

Curves are ``level,value`` CSVs (mass-volume curves add ``log_value``), persistence pairs are
``birth_alpha,death_alpha,persistence,birth_row,birth_col`` and sample rankings ``index,alpha``,
all with 6 decimals. Fields and masks are ESRI ASCII grids.
"""
import hashlib
import json
import logging
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from activity_space.topology import CurveKind, PersistencePair, SummaryCurve

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"
PACKAGE_NAME = "activity-space"
CURVE_FILENAMES = {
    CurveKind.MASS_VOLUME: "mass_volume_curve.csv",
    CurveKind.BETTI: "betti_curve.csv",
    CurveKind.PERSISTENCE: "persistence_curve.csv",
}
PAIRS_FILENAME = "persistence_pairs.csv"
RANK_FIELD_FILENAME = "rank_field.asc"
DENSITY_FIELD_FILENAME = "density_field.asc"
SAMPLE_ALPHA_FILENAME = "sample_alpha.csv"
MANIFEST_FILENAME = "manifest.json"


def package_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "unknown"


def _exact_token(value: float, spec: str) -> str:
    """``value`` formatted with ``spec`` when that reads back exactly, else in full precision."""
    token = format(value, spec)
    return token if float(token) == value else repr(float(value))


def level_set_filename(gamma: float) -> str:
    """
    >>> level_set_filename(0.6)
    'level_set_0.60.asc'
    >>> level_set_filename(0.125)
    'level_set_0.125.asc'
    """
    return f"level_set_{_exact_token(gamma, '.2f')}.asc"


def rank_field_filename(bandwidth: float) -> str:
    """
    >>> rank_field_filename(0.5)
    'rank_field_h0.5.asc'
    >>> rank_field_filename(0.1234567)
    'rank_field_h0.1234567.asc'
    """
    return f"rank_field_h{_exact_token(bandwidth, 'g')}.asc"


def _write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"wrote {len(frame)} rows to {path}")
    return path


def curve_frame(curve: SummaryCurve) -> pd.DataFrame:
    frame = curve.to_frame()
    if curve.kind is CurveKind.MASS_VOLUME:
        with np.errstate(divide="ignore"):
            frame["log_value"] = np.where(curve.values > 0, np.log(curve.values), np.nan)
    return frame


def write_curve_csv(curve: SummaryCurve, path: Union[str, Path]) -> Path:
    return _write_frame(curve_frame(curve), path)


def read_curve_csv(path: Union[str, Path]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if list(frame.columns[:2]) != ["level", "value"]:
        raise ValueError(f"{path}: expected the columns level,value, got {list(frame.columns)}")
    return frame


def pairs_frame(pairs: Sequence[PersistencePair]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "birth_alpha": [p.birth_alpha for p in pairs],
            "death_alpha": [p.death_alpha for p in pairs],
            "persistence": [p.persistence for p in pairs],
            "birth_row": pd.Series([p.birth_cell.row for p in pairs], dtype="int64"),
            "birth_col": pd.Series([p.birth_cell.col for p in pairs], dtype="int64"),
        }
    )


def write_pairs_csv(pairs: Sequence[PersistencePair], path: Union[str, Path]) -> Path:
    return _write_frame(pairs_frame(pairs), path)


def write_sample_alpha_csv(alphas: np.ndarray, path: Union[str, Path]) -> Path:
    frame = pd.DataFrame({"index": np.arange(len(alphas)), "alpha": np.asarray(alphas)})
    return _write_frame(frame, path)


def write_points_csv(points: np.ndarray, path: Union[str, Path]) -> Path:
    """``x,y`` rows at full precision."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    path = Path(path)
    pd.DataFrame({"x": points[:, 0], "y": points[:, 1]}).to_csv(
        path, index=False, lineterminator="\n"
    )
    return path


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(
    command: str,
    config: Dict[str, Any],
    input_path: Optional[Union[str, Path]] = None,
    **extra: Any,
) -> Dict[str, Any]:
    """Everything needed to rerun a command; deliberately free of timestamps."""
    manifest: Dict[str, Any] = {
        "command": command,
        "version": package_version(),
        "config": config,
        "input": None,
    }
    if input_path is not None:
        manifest["input"] = {"path": str(input_path), "sha256": file_sha256(input_path)}
    manifest.update(extra)
    return manifest


def write_manifest(manifest: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
