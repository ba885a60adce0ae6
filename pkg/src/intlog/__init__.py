"""intlog: a two-step semantics engine for first-order logic with
concept abstraction.

Formulas are compiled to interned concept expressions (the intensional
step); each finite world then maps concepts to relations through a small
relational algebra (the extensional step).  A brute-force satisfaction
evaluator provides an independent reference, and the two routes are
checked against each other over enumerated world sets.
"""

from .errors import IntlogError

__all__ = ["IntlogError"]
__version__ = "0.1.0"
