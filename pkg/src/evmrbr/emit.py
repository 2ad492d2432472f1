"""Canonical text rendering of rule programs.

The concrete syntax is frozen as the interchange format (extension
``.rbr``): comma-separated parameters and statements, ``=>`` between head
and body, infix arithmetic, functor bit operations, ``--`` comments.  A
header comment records the memory-address and calldata-offset tables so
text can be mapped back to the bytecode-level layout.
"""

from __future__ import annotations

from dataclasses import replace

from .rbr import (
    Assign,
    BinOp,
    BitOp,
    Call,
    Expr,
    Guard,
    Nop,
    Not,
    Num,
    Rule,
    Statement,
    Var,
    rule_sort_key,
)


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Num):
        return str(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, BinOp):
        return f"{format_expr(expr.lhs)} {expr.op} {format_expr(expr.rhs)}"
    if isinstance(expr, BitOp):
        return f"{expr.op}({format_expr(expr.lhs)}, {format_expr(expr.rhs)})"
    if isinstance(expr, Not):
        return f"not({format_expr(expr.operand)})"
    raise TypeError(f"not an expression: {expr!r}")


def format_statement(stmt: Statement) -> str:
    if isinstance(stmt, Assign):
        return f"{stmt.target} = {format_expr(stmt.value)}"
    return f"nop({stmt.mnemonic})"


def format_guard(guard: Guard) -> str:
    return f"{guard.relation}({format_expr(guard.lhs)}, {format_expr(guard.rhs)})"


def _format_call(rule: Rule, call: Call) -> str:
    args = ", ".join(rule.call_args(call))
    return f"call({call.target}({args}))"


def _format_rule(rule: Rule, nops: bool) -> str:
    head = f"{rule.name}({', '.join(rule.params())}) =>"
    if rule.guard is not None:
        assert rule.continuation is not None, "guarded rule without continuation"
        return f"{head}\n  {format_guard(rule.guard)} | {_format_call(rule, rule.continuation)}"
    items = [
        format_statement(s)
        for s in rule.body
        if nops or not isinstance(s, Nop)
    ]
    if rule.continuation is not None:
        items.append(_format_call(rule, rule.continuation))
    if not items:
        return head
    return head + "\n" + ",\n".join("  " + item for item in items)


def _header(rules: list[Rule]) -> list[str]:
    if not rules:
        return []
    layout = rules[0].layout
    lines = []
    if layout.lmap:
        by_index = sorted(layout.lmap.items(), key=lambda kv: kv[1])
        table = ", ".join(f"{addr} -> l{idx}" for addr, idx in by_index)
        lines.append(f"-- lmap: {table}")
    if layout.md_offsets:
        table = ", ".join(
            f"md{i} = calldata[{off}]" for i, off in enumerate(layout.md_offsets)
        )
        lines.append(f"-- md: {table}")
    return lines


def emit_rbr(rules: list[Rule], *, nops: bool = True) -> str:
    """Render rules in ascending name order; byte-identical across runs.

    With ``nops=False`` the ``nop(...)`` markers are left out.
    """
    ordered = sorted(rules, key=lambda r: rule_sort_key(r.name))
    header = _header(rules)
    chunks = ["\n".join(header)] if header else []
    chunks += [_format_rule(r, nops) for r in ordered]
    return "\n\n".join(chunks) + "\n" if chunks else ""


def export_saco(rules: list[Rule]) -> str:
    """Render rules with every bit-operation forgotten.

    Statements whose expression involves ``and``/``or``/``xor``/``not`` are
    replaced by assignments from new fresh variables (indices continuing
    each rule's own counter); ``nop`` markers are dropped.
    """
    rewritten = []
    for rule in rules:
        counter = rule.fresh_count()
        body: list[Statement] = []
        for stmt in rule.body:
            if isinstance(stmt, Nop):
                continue
            if isinstance(stmt, Assign) and isinstance(stmt.value, (BitOp, Not)):
                body.append(Assign(stmt.target, Var(f"fresh_{counter}")))
                counter += 1
            else:
                body.append(stmt)
        rewritten.append(replace(rule, body=body))
    return "-- saco\n" + emit_rbr(rewritten, nops=False)
