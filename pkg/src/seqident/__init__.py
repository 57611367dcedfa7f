"""Sequential block-wise identification of full-data distributions for
categorical variables with nonignorable missingness."""

from .assumptions import AssumptionStep, StepKind
from .closed_form import closed_form_example1, closed_form_example2
from .engine import IdentResult, StageFactor, assemble_full, reorder_variables, run_sequential
from .errors import (
    ConfigError,
    IdentificationError,
    MechanismUnavailable,
    PlanInvalid,
    SeqIdentError,
    ZeroDenominator,
)
from .io import CountTable, read_counts, read_full, read_observed, write_full, write_observed
from .plan import BlockPartition, CarrySets, IdentPlan, load_plan, validate_plan
from .sensitivity import (
    DirichletPrior,
    Estimand,
    MechanismSuite,
    SensitivityDraws,
    run_suite,
    sample_posterior,
    summarize,
)
from .tables import (
    CategorySpace,
    FullTable,
    MissPattern,
    ObservedTable,
    ZeroCellPolicy,
    observed_from_full,
    study_marginal,
)
from .verify import NpsReport, check_nps, check_stepwise_nps

__version__ = "0.1.0"

__all__ = [
    "AssumptionStep", "StepKind", "closed_form_example1", "closed_form_example2", "IdentResult",
    "StageFactor", "assemble_full", "reorder_variables", "run_sequential", "ConfigError",
    "IdentificationError", "MechanismUnavailable", "PlanInvalid", "SeqIdentError", "ZeroDenominator",
    "CountTable", "read_counts", "read_full", "read_observed", "write_full", "write_observed",
    "BlockPartition", "CarrySets", "IdentPlan", "load_plan", "validate_plan", "DirichletPrior",
    "Estimand", "MechanismSuite", "SensitivityDraws", "run_suite", "sample_posterior", "summarize",
    "CategorySpace", "FullTable", "MissPattern", "ObservedTable", "ZeroCellPolicy",
    "observed_from_full", "study_marginal", "NpsReport", "check_nps", "check_stepwise_nps",
    "__version__",
]
