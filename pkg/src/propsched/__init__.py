"""Fixpoint schedulers for propagation rules over finite partial orders,
instantiated for membership rules of finite-domain constraints."""

from .kernel import (
    CompiledRuleSet,
    SchedulerTrace,
    check_friends_conditions,
    compute_friends_obviated,
    gi_fixpoint,
    r_fixpoint,
    resume,
)
from .memrules import MembershipRule, compile_rules
from .rulegen import ConstraintDef, generate_equality_rules, generate_membership_rules, load_bundled
from .store import TOP, Store, StoreLattice, Universe

__version__ = "0.1.0"
