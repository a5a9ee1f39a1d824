"""Compressive tomography of OAM photon states from camera intensity scans."""

from .optics import BeamGeometry, ModeIndex, TransversePoint, beam_radius, gouy_phase, lg_amplitude
from .qstate import (
    DensityMatrix,
    HermitianVector,
    ModeBasis,
    hs_error,
    matricize,
    project_psd,
    random_state,
    test_state,
    vectorize,
)
from .sensor import (
    IntensityScan,
    MeasurementMap,
    ScanGeometry,
    build_measurement_map,
    independent_detections,
    pixel_probability,
    simulate_scan,
)
from .solver import (
    ReconstructionReport,
    SolverConfig,
    reconstruct_positive,
    reconstruct_pseudoinverse,
    uniqueness_entropy,
)

__version__ = "0.1.0"
