"""
CSV serialization of trajectories and controls.
"""
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from .grid import Control, TimeGrid, Trajectory

FLOAT_FORMAT = "%.17g"


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write a DataFrame with the package-wide CSV conventions."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    frame = pd.DataFrame({"t": traj.grid.nodes})
    for j in range(traj.dim):
        frame[f"y{j + 1}"] = traj.nodes[:, j]
    return frame


def control_frame(control: Control) -> pd.DataFrame:
    frame = pd.DataFrame({"t_mid": control.grid.midpoints})
    for j in range(control.dim):
        frame[f"u{j + 1}"] = control.values[:, j]
    return frame


def write_trajectory_csv(traj: Trajectory, path: Union[str, Path]) -> Path:
    return write_frame(trajectory_frame(traj), path)


def write_control_csv(control: Control, path: Union[str, Path]) -> Path:
    return write_frame(control_frame(control), path)


def _grid_from_times(times: np.ndarray, nodal: bool) -> TimeGrid:
    n = len(times) - 1 if nodal else len(times)
    if n < 1:
        raise ValueError("CSV holds too few rows to define a grid")
    horizon = times[-1] if nodal else times[0] + times[-1]
    # midpoint times only determine T up to rounding
    return TimeGrid(horizon=float(f"{horizon:.12g}"), n_intervals=n)


def read_trajectory_csv(path: Union[str, Path]) -> Trajectory:
    frame = pd.read_csv(path)
    if "t" not in frame.columns:
        raise ValueError(f"{path}: missing 't' column")
    columns = [c for c in frame.columns if c.startswith("y")]
    grid = _grid_from_times(frame["t"].to_numpy(), nodal=True)
    return Trajectory(grid, frame[columns].to_numpy(dtype=float))


def read_control_csv(path: Union[str, Path]) -> Control:
    frame = pd.read_csv(path)
    if "t_mid" not in frame.columns:
        raise ValueError(f"{path}: missing 't_mid' column")
    columns = [c for c in frame.columns if c.startswith("u")]
    grid = _grid_from_times(frame["t_mid"].to_numpy(), nodal=False)
    return Control(grid, frame[columns].to_numpy(dtype=float))
