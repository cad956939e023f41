"""Gaussian steady states of a levitated nanosphere in an optical cavity
under continuous homodyne and position monitoring."""

from .errors import (
    ConfigError,
    DomainError,
    NanosphereError,
    NumericalError,
    StabilityError,
    UnitError,
)
from .model import (
    OMEGA,
    UNMONITORED,
    GaussianState,
    MeasurementParams,
    MechanicalSummary,
    SystemParams,
    is_physical,
    symplectic_form,
    thermal_state,
    vacuum_state,
    validate,
)
from .matrices import (
    ConditionalMatrices,
    UnconditionalMatrices,
    build_conditional,
    build_unconditional,
)
from .stability import StabilityVerdict, is_detectable, is_hurwitz, stability_map
from .solvers import (
    FeedbackGain,
    SteadyState,
    feedback_gain,
    lyapunov_residual,
    riccati_residual,
    solve_lyapunov,
    solve_riccati,
)
from .merit import (
    phonon_number,
    position_uncertainty,
    purity,
    reduce_mechanical,
    squeezing,
    summarize,
)
from .dynamics import (
    EnsembleRecord,
    TrajectoryRecord,
    integrate_moments,
    simulate_ensemble,
    simulate_trajectory,
)
from .experiment import (
    ExperimentConfig,
    OperatingPoint,
    calibrate,
    coupling_constants,
    intrinsic_loss,
    operating_point,
    photon_number,
    reference_setup,
    total_loss,
)
from .sweep import (
    SweepRow,
    SweepSpec,
    decoupled_curves,
    decoupled_steady_state,
    default_detuning_grid,
    detuning_sweep,
    optimize_phase,
    stability_scan,
)

__version__ = "0.1.0"
