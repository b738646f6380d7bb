"""Finite-structure workbench for fusions of Fraisse classes over a shared language."""

from .classes import ClassSpec, Theory, builtin_class, enumerate_models
from .closures import acl_test_duplication, bcl_closure, ccl_fixpoint, check_indep_axioms, indep_eval
from .errors import (
    BudgetExceeded, ClassViolation, ClosureDefect, FusionLabError, LanguageError, ParseError,
    PreconditionError, SortError, StructureError, TypeClashError,
)
from .fraisse import (
    FamilyConfig, build_generic, check_class_properties, check_extension_axioms, check_fraisse_expansion,
    realize_joint_type,
)
from .interpretations import decode, encode, henson_reduct, roundtrip_check
from .logic import Language, make_language_family, parse_formula, to_text
from .normal_forms import bounded_from_check, check_bounded, flatten_to_eflat, morleyize, split_flat_by_language
from .structures import FiniteStructure, automorphisms, evaluate, find_isomorphism

__version__ = "0.1.0"
