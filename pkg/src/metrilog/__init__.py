"""Continuous first-order logic over finite metric structures.

Formulas take truth values in [0, 1] with Łukasiewicz implication as the
only binary connective; everything is computed in exact rationals.
"""
from .core import (
    FamilyInterp,
    FunctionSymbol,
    MetricStructure,
    Modulus,
    PredicateSymbol,
    Signature,
    check_all_moduli,
    check_modulus,
    product_metric,
    validate_metric,
)
from .omitting import (
    MemberSchema,
    PartialType,
    WitnessPool,
    metrically_principal_over,
    omit_search,
    omits,
    principal_over,
    realizes,
    thicken,
)
from .parser import ParseError, parse_formula, parse_structure, print_formula
from .semantics import (
    EvalConfig,
    Registry,
    Theory,
    ValueInterval,
    Verdict,
    compare_L,
    evaluate,
    mod_interval,
    models,
    satisfies,
)
from .ultraproduct import FRECHET, NotComputable, Principal, StructureSequence, check_claim3, ultraproduct

__version__ = "0.1.0"

__all__ = [
    "check_all_moduli",
    "check_claim3",
    "check_modulus",
    "compare_L",
    "EvalConfig",
    "evaluate",
    "FamilyInterp",
    "FRECHET",
    "FunctionSymbol",
    "MemberSchema",
    "metrically_principal_over",
    "MetricStructure",
    "mod_interval",
    "models",
    "Modulus",
    "NotComputable",
    "omit_search",
    "omits",
    "parse_formula",
    "parse_structure",
    "ParseError",
    "PartialType",
    "PredicateSymbol",
    "Principal",
    "principal_over",
    "print_formula",
    "product_metric",
    "realizes",
    "Registry",
    "satisfies",
    "Signature",
    "StructureSequence",
    "Theory",
    "thicken",
    "ultraproduct",
    "validate_metric",
    "ValueInterval",
    "Verdict",
    "WitnessPool",
]
