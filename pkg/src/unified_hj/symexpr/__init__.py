"""Small exact-rational computer algebra core over jet coordinates."""

from .calculus import depends_on, diff, expand, is_zero, simplify
from .evaluate import (
    DomainError,
    EvaluationError,
    UnassignedVariableError,
    compile_expr,
    compile_exprs,
    equivalent_numeric,
    eval_expr,
    sample_points,
)
from .expr import (
    FUNCTIONS,
    MINUS_ONE,
    ONE,
    ZERO,
    Add,
    Const,
    Expr,
    Func,
    Mul,
    Pow,
    SymbolicError,
    Var,
    VarId,
    add,
    as_expr,
    const,
    cos,
    div,
    exp,
    func,
    log,
    mul,
    neg,
    p,
    param,
    power,
    q,
    sin,
    sqrt,
    sub,
    subs,
    var,
)
from .parser import (
    CoordinateRangeError,
    ParseContext,
    ParseError,
    UnknownIdentifierError,
    is_parameter_name,
    parse_expr,
    parse_token,
)
from .printer import to_string

__all__ = [name for name in dir() if not name.startswith("_")]
