"""Online detection of machine-generated text scores by sequential betting."""

__version__ = "0.1.0"

from .baselines import PermutationConfig, batched_permutation_run, permutation_pvalue
from .betting import (
    DEFAULT_GAMMA,
    BettingTrace,
    DecisionInterval,
    OnsBettorState,
    WealthState,
    decision_interval,
    log_loss,
    log_loss_gradient,
    ons_update,
    wealth_step,
)
from .calibration import (
    CalibrationResult,
    estimate_d,
    estimate_epsilon,
    oracle_d,
    oracle_epsilon,
)
from .detectors import (
    DECLARED_ANYTIME,
    DECLARED_AT_BUDGET,
    RETAINED,
    DetectorConfig,
    DPolicy,
    TestOutcome,
    finalize,
    run_detector,
)
from .errors import (
    BetDetectError,
    ConfigurationError,
    DomainError,
    InputDataError,
    InvalidBoundError,
    WealthViolationError,
)
from .evaluation import (
    AlphaGrid,
    MonteCarloReport,
    emit_report,
    empirical_regret,
    monte_carlo,
    ratio_diagnostic,
    regret_audit,
)
from .kernels import BACKEND
from .simulation import ScoreObservation, ScoreStream, StreamSpec, generate, load_scores, stream_preset

__all__ = [name for name in dir() if not name.startswith("_")]
