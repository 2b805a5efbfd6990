"""Simulation and exact analysis of semi-quantum finite automata."""

from .analysis import (
    Acceptance,
    ComplexityRow,
    IterationOutcome,
    VerificationReport,
    acceptance,
    acceptance_oneway,
    complexity_report,
    geometric_totals,
    iteration_analysis,
    loop_total,
    verify_mode,
    walk_absorption,
)
from .constructions import (
    PromiseInstance,
    TradeoffPartition,
    dfa_len,
    dfa_mod,
    eq_1qcfa,
    intersect_1qcfa,
    len_2qcfa,
    lift_dfa,
    lift_moqfa,
    mod_2qcfa,
    moqfa_mod,
    tradeoff_1qcfa,
)
from .errors import (
    ConstructionFailed,
    IllFormedMachine,
    InvalidArgument,
    NonTermination,
    SpecError,
    UnsupportedMachine,
)
from .model import (
    DFA,
    MOQFA,
    AcceptanceMode,
    Configuration,
    Halt,
    OneWayQCFA,
    TwoWayQCFA,
    dfa_minimize,
    dfa_run,
    qcfa_step,
)
from .montecarlo import Estimate, RunResult, estimate, simulate_run
from .quantum import (
    ProjectiveMeasurement,
    StateVector,
    UnitaryOp,
    complete_unitary_from_first_column,
    measure,
    rotation,
)
from .spec_io import spec_load, spec_save

__version__ = "0.1.0"
