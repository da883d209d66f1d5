# Core discretization substrate: grids, trajectories, controls, quadrature
from .grid import (
    TimeGrid,
    Trajectory,
    Control,
    IntervalSample,
    IntervalBatch,
    quad_intervals,
    quad_values,
    slope,
    sample_function,
    sample_control,
    constant_trajectory,
    constant_control,
)
from .functions import TimeFunction, const, exp_rate, power, parse_time_function
from .io import (
    write_frame,
    write_trajectory_csv,
    write_control_csv,
    read_trajectory_csv,
    read_control_csv,
    trajectory_frame,
    control_frame,
)
