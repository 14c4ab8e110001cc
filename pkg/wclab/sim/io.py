import struct
from pathlib import Path

import numpy as np
import pandas as pd

from wclab.config.settings import BINARY_MAGIC, BINARY_VERSION
from wclab.sim.models import CoupledTrajectory, EmpiricalMeasure

# magic, version, n, d
_HEADER = struct.Struct("<4sIQQ")


def _coordinate_columns(prefix: str, width: int) -> list[str]:
    return [f"{prefix}{j}" for j in range(width)]


def trajectory_frame(trajectory: CoupledTrajectory) -> pd.DataFrame:
    n = len(trajectory.steps)
    x = trajectory.x.reshape(n, -1)
    y = trajectory.y.reshape(n, -1)
    df = pd.DataFrame({"step": trajectory.steps})
    df[_coordinate_columns("x", x.shape[1])] = x
    df[_coordinate_columns("y", y.shape[1])] = y
    df["distance"] = trajectory.distance
    if trajectory.rho is not None:
        df["rho"] = trajectory.rho
    return df


def ensemble_frame(measures: list[EmpiricalMeasure]) -> pd.DataFrame:
    """Long format: one row per (step, replica)."""
    frames = []
    for measure in measures:
        df = pd.DataFrame(measure.points, columns=_coordinate_columns("x", measure.d))
        df.insert(0, "replica", np.arange(measure.n))
        df.insert(0, "step", measure.step)
        frames.append(df)
    return pd.concat(frames, ignore_index=True)


def write_csv(df: pd.DataFrame, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.17g")


def write_binary_frame(points: np.ndarray, path: Path):
    points = np.ascontiguousarray(points, dtype="<f8")
    if points.ndim != 2:
        raise ValueError(f"Binary frames hold n x d arrays, got shape {points.shape}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, points.shape[0], points.shape[1]))
        f.write(points.tobytes())


def read_binary_frame(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, version, n, d = _HEADER.unpack(f.read(_HEADER.size))
        if magic != BINARY_MAGIC:
            raise ValueError(f"Not a binary frame: magic {magic!r}")
        if version != BINARY_VERSION:
            raise ValueError(f"Unsupported frame version: {version}")
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != n * d:
        raise ValueError(f"Frame holds {data.size} values, header announces {n} x {d}")
    return data.reshape(n, d).astype(np.float64)
