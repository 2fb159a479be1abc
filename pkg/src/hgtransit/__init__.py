"""Simulate and invert single-atom transit signals in higher-order transverse cavity modes."""

from ._kernels import ACTIVE_BACKEND
from .errors import (
    ConfigurationError,
    InfeasibleMeasurementError,
    InsufficientStructureError,
    NoTransitError,
    ScheduleError,
    StabilityError,
    UndefinedCorrelationError,
    UndefinedDecompositionError,
    ZeroCouplingError,
)
from .geometry import (
    CavityParams,
    DerivedParams,
    derive,
    family_spectrum,
    family_splitting,
    mode_frequency,
    with_astigmatic_splitting,
)
from .modes import (
    EffectiveDecomposition,
    FieldSuperposition,
    IntensityGrid,
    ModeSpec,
    ScalingReport,
    coupling,
    coupling_ratio,
    effective_mode,
    hermite_poly,
    intensity_grid,
    mode_amplitude,
    scaling_report,
)
from .transmission import Detuning, axial_average, mode_selectivity, transmission_ratio
from .transit import (
    ExpectedFlux,
    ProbeSchedule,
    Segment,
    Trajectory,
    TransitRecord,
    ballistic_launch_velocity,
    ballistic_velocity,
    expected_flux,
    make_switched_schedule,
    position_at,
    record_from_json_dict,
    sample_counts,
    simulate_ensemble,
    simulate_transit,
    single_mode_schedule,
)

__version__ = "0.1.0"
