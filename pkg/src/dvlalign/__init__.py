"""INS/DVL alignment: sensor simulation, SVD baseline and a 1-D ResNet regressor."""
from .dvl import DvlSpec, simulate_dvl
from .estimators import ResNetAligner, SVDAligner
from .exceptions import (CorruptManifest, DegenerateWindow, Diverged, GimbalLock,
                         LengthMismatch, MissingModel, ShapeMismatch,
                         SingularGeometry, TooShort)
from .imu import IMU_GRADES, ImuSpec, imu_grade
from .metrics import EvalReport, aoe, max_geodesic_error, rmse
from .so3 import euler_to_matrix, matrix_to_euler
from .trajgen import preset
from .wahba import svd_align

__version__ = "0.1.0"

__all__ = [
    "CorruptManifest", "DegenerateWindow", "Diverged", "DvlSpec", "EvalReport",
    "GimbalLock", "IMU_GRADES", "ImuSpec", "LengthMismatch", "MissingModel",
    "ResNetAligner", "SVDAligner", "ShapeMismatch", "SingularGeometry", "TooShort",
    "aoe", "euler_to_matrix", "imu_grade", "matrix_to_euler", "max_geodesic_error",
    "preset", "rmse", "simulate_dvl", "svd_align",
]
