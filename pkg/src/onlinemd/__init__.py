"""Online mirror descent for constrained online convex optimization."""

from .errors import (
    BudgetExhausted,
    ComputationError,
    ContractViolation,
    DomainError,
    InfeasibleError,
    InputError,
)
from .instance import ProblemInstance
from .oracles import (
    AffineAbsObjective,
    FirstOrderAnswer,
    MaxAffineConstraint,
    SqrtQuadraticObjective,
    lipschitz_bound,
)
from .problems import Family, GeneratorSpec, default_run_params, generate
from .prox import ProxKind, ProxSetup
from .solver import (
    Algorithm,
    BoundCheckResult,
    RunConfig,
    RunReport,
    StepRecord,
    certificate,
    check_bounds,
    offline_comparator,
    regret,
    run,
    run_adaptive,
    run_adaptive_multi,
    run_nonadaptive,
)

__version__ = "0.1.0"
