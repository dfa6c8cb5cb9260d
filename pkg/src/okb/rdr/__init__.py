from .engine import (
    CASE_VAR,
    ConsoleExpert,
    Expert,
    ExpertAnswer,
    ExpertRequest,
    GrdrResult,
    ScriptedExpert,
    case_variable,
    check_cornerstones,
    classify,
    fit_case,
    fit_grdr,
    instantiate,
    run_grdr,
)
from .model import (
    GRDR,
    STOP,
    Case,
    CaseQuery,
    ConclusionExpr,
    ConclusionValue,
    FitReport,
    Rule,
    RuleTree,
    Target,
    Trace,
    TraceEntry,
    as_case,
    case_from_json,
    case_to_json,
)
from .module_io import (
    load_rule_module,
    parse_conclusion,
    print_conclusion,
    save_rule_module,
)

__all__ = [
    "CASE_VAR", "ConsoleExpert", "Expert", "ExpertAnswer", "ExpertRequest",
    "GrdrResult",
    "ScriptedExpert", "case_variable", "check_cornerstones", "classify",
    "fit_case", "fit_grdr", "instantiate", "run_grdr",
    "GRDR", "STOP", "Case", "CaseQuery", "ConclusionExpr", "ConclusionValue",
    "FitReport", "Rule", "RuleTree", "Target", "Trace", "TraceEntry", "as_case",
    "case_from_json", "case_to_json",
    "load_rule_module", "parse_conclusion", "print_conclusion", "save_rule_module",
]
