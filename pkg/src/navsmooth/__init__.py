"""Post-processing INS/GNSS navigation toolkit.

Forward error-state EKF, backward information filter, two-filter and
fixed-interval smoothing, a learned-fusion stage with pluggable correction
providers, a trajectory/sensor simulator and evaluation metrics.
"""

from .backward_info import BackwardResult, backward_propagate, backward_update, init_backward, run_backward
from .blends import (
    CorrectionProvider,
    FileProvider,
    OracleProvider,
    ZeroProvider,
    assemble_input_row,
    blends_fuse_epoch,
    bounded_correction,
    modify_covariances,
    run_blends,
)
from .errors import ArgumentError, DomainError, FormatError, NavError, NumericalError, ProviderError
from .forward_ekf import FilterTrace, ForwardConfig, apply_and_reset, predict, run_forward, update
from .geodesy import geo_to_ned, ned_to_geo
from .linalg import symmetrize_and_condition
from .metrics import nav_errors, pci, rmse, sigma_coverage
from .pipeline import RunConfig, run_pipeline
from .simkit import SensorNoiseSpec, TrajectorySpec, generate_truth, synthesize_gnss, synthesize_imu
from .smoothers import SmoothedEpoch, SmoothedTrajectory, rtss_smooth, tfs_full_state_fuse, tfs_fuse_epoch, tfs_smooth
from .strapdown import ImuNoiseSpec, SystemMatrices, linearize, propagate_nominal
from .types import (
    BackwardInfo,
    BoundSchedule,
    CorrectionRecord,
    GnssFix,
    ImuSample,
    NominalState,
    default_bound_schedule,
)

__version__ = "0.1.0"
