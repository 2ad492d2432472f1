"""Interpreter for rule programs over unbounded integers.

Runs a rule set from its entry rule, following continuation calls and
picking the unique applicable rule of each guarded pair.  ``fresh_*``
variables stand for statically unknown values; reading an unbound one
draws from a seeded deterministic source, so runs are reproducible but
fresh-derived data carries no information.

Arithmetic is over unbounded integers: division and modulo truncate
toward zero and yield 0 for a zero divisor (as the machine the rules came
from does); ``not`` is the 256-bit complement, the one width-bounded
concession the bit operations need.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import EvmRbrError, NoApplicableRule, StepLimitExceeded, UnboundVariable
from .rbr import Assign, BinOp, BitOp, Guard, Not, Num, Rule, Var

_MASK = (1 << 256) - 1


@dataclass
class RbrState:
    """Bindings of the current rule frame plus the rule it is in."""

    bindings: dict[str, int] = field(default_factory=dict)
    rule: str = ""


def _trunc_div(a: int, b: int) -> int:
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _trunc_mod(a: int, b: int) -> int:
    if b == 0:
        return 0
    return a - b * _trunc_div(a, b)


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _trunc_div,
    "%": _trunc_mod,
    "^": lambda a, b: a**b,
}

_BITS = {
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "xor": lambda a, b: a ^ b,
}

_RELATION_TESTS = {
    "eq": lambda a, b: a == b,
    "neq": lambda a, b: a != b,
    "lt": lambda a, b: a < b,
    "leq": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "geq": lambda a, b: a >= b,
}


class _Frame:
    def __init__(self, bindings: dict[str, int], rule: str, fresh: random.Random):
        self.bindings = bindings
        self.rule = rule
        self.fresh = fresh

    def value(self, name: str) -> int:
        if name in self.bindings:
            return self.bindings[name]
        if name.startswith("fresh_"):
            drawn = self.fresh.randrange(1 << 64)
            self.bindings[name] = drawn
            return drawn
        raise UnboundVariable(name, self.rule)

    def eval(self, expr) -> int:
        if isinstance(expr, Num):
            return expr.value
        if isinstance(expr, Var):
            return self.value(expr.name)
        if isinstance(expr, BinOp):
            lhs, rhs = self.eval(expr.lhs), self.eval(expr.rhs)
            if expr.op == "^" and rhs < 0:
                raise EvmRbrError("negative exponent")
            return _ARITH[expr.op](lhs, rhs)
        if isinstance(expr, BitOp):
            return _BITS[expr.op](self.eval(expr.lhs), self.eval(expr.rhs))
        if isinstance(expr, Not):
            return self.eval(expr.operand) ^ _MASK
        raise TypeError(f"not an expression: {expr!r}")

    def holds(self, guard: Guard) -> bool:
        return _RELATION_TESTS[guard.relation](self.eval(guard.lhs), self.eval(guard.rhs))


def run_rbr(
    rules: list[Rule],
    init: dict[str, int] | RbrState,
    step_limit: int = 10**6,
    entry: str = "block_0",
    fresh_seed: int = 0,
) -> tuple[RbrState, list[str]]:
    """Run from ``entry`` until a rule without continuation; returns the
    final state and the sequence of rule names applied.

    ``init`` must bind every field/local/blockchain parameter of the entry
    rule (the entry takes no stack parameters).
    """
    by_name: dict[str, list[Rule]] = {}
    for rule in rules:
        by_name.setdefault(rule.name, []).append(rule)
    if entry not in by_name:
        raise EvmRbrError(f"no rule named {entry}")

    bindings = dict(init.bindings if isinstance(init, RbrState) else init)
    fresh = random.Random(fresh_seed)
    name = entry
    trace: list[str] = []
    steps = 0
    while True:
        steps += 1
        if steps > step_limit:
            raise StepLimitExceeded(f"no halt within {step_limit} rule applications")
        trace.append(name)
        frame = _Frame(bindings, name, fresh)
        group = by_name.get(name)
        if group is None:
            raise EvmRbrError(f"call to undefined rule {name}")
        if len(group) == 1 and group[0].guard is None:
            rule = group[0]
        else:
            applicable = [r for r in group if r.guard is not None and frame.holds(r.guard)]
            if len(applicable) != 1:
                raise NoApplicableRule(name, len(applicable))
            rule = applicable[0]

        for stmt in rule.body:
            if isinstance(stmt, Assign):
                bindings[stmt.target] = frame.eval(stmt.value)

        if rule.continuation is None:
            return RbrState(bindings=bindings, rule=name), trace
        call = rule.continuation
        args = rule.call_args(call)
        bindings = {arg: frame.value(arg) for arg in args}
        name = call.target
