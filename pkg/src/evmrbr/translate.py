"""Translation of resolved blocks into guarded rules.

Each live block becomes one rule (three for conditional jumps: the block
rule plus a complementary guarded pair).  The operand stack is flattened
into variables ``s0..sn`` with the top at index ``m``; ``m = -1`` encodes
the empty stack, so the entry block takes no stack parameters.

Instruction effects:

* PUSH/DUP/SWAP/POP and arithmetic map to assignments over stack slots.
* Storage and memory accesses with a constant key/address read or write
  the matching ``g``/``l`` variable; non-constant ones record the address
  in a rule-local variable (``gl``/``ll`` for loads, ``gs*``/``ls*`` for
  stores) and lose the value to a ``fresh_*`` variable.
* Environment reads push the named blockchain variable; constant-offset
  calldata reads push the matching ``md*`` variable.
* Anything else (hashing, calls, ...) consumes its operands and produces
  ``fresh_*`` values.

The trailing comparison cluster of a conditional jump is not materialized:
it becomes the guard pair of the ``jump_`` rules, as is the push of a jump
target.  With ``nops=True`` every consumed bytecode leaves a ``nop(MNEMONIC)``
marker so a cost analysis can still see the original instructions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .cfg import Block, Cfg, FallThrough, Jump, JumpI, id_sort_key
from .errors import EvmRbrError, StackUnderflow
from .opcodes import BLOCKCHAIN_READS
from .rbr import (
    Assign,
    BinOp,
    BitOp,
    Call,
    Guard,
    Nop,
    Not,
    Num,
    Rule,
    Statement,
    Var,
    VarLayout,
)

log = logging.getLogger(__name__)

_BINOPS = {"ADD": "+", "SUB": "-", "MUL": "*", "DIV": "/", "MOD": "%", "EXP": "^"}
_BITOPS = {"AND": "and", "OR": "or", "XOR": "xor"}
# Comparison openers of a guard window, with the relation that holds on the
# taken branch.  Signed variants coincide with the unsigned relations on the
# value ranges the rules are meant for.
_CMP_GUARDS = {"GT": "gt", "LT": "lt", "EQ": "eq", "SGT": "gt", "SLT": "lt"}
# Copy-style memory writers: index of the (destination, length) operands.
_MEM_WRITERS = {
    "CALLDATACOPY": (0, 2),
    "CODECOPY": (0, 2),
    "RETURNDATACOPY": (0, 2),
    "EXTCODECOPY": (1, 3),
    "MSTORE8": (0, None),
}


class UnsupportedGuard(EvmRbrError):
    """The instruction window before a conditional jump matches no guard
    pattern; the caller falls back to value semantics."""


@dataclass
class TranslationState:
    """Mutable cursor while translating one rule.

    ``m`` is the index of the stack top (-1 = empty).  ``consts`` holds the
    resolver's per-offset constant views of popped operands.
    """

    m: int
    block_id: str = "?"
    fresh_counter: int = 0
    nops: bool = False
    consts: dict[int, tuple] = field(default_factory=dict)

    def fresh(self) -> Var:
        var = Var(f"fresh_{self.fresh_counter}")
        self.fresh_counter += 1
        return var


def _s(i: int) -> str:
    return f"s{i}"


def build_layout(cfg: Cfg) -> VarLayout:
    """Collect the variable families used by the live blocks.

    Memory addresses register in first-seen order over blocks in ascending
    id order; calldata offsets are ranked ascending; environment names are
    sorted, so the layout is deterministic.
    """
    k = -1
    lmap: dict[int, int] = {}
    md: set[int] = set()
    named: set[str] = set()
    for block in cfg.live_blocks():
        for ins, popped in zip(block.instrs, block.const_operands or []):
            name = ins.mnemonic
            if name in ("MSTORE", "MLOAD"):
                addr = popped[0]
                if addr is not None and addr not in lmap:
                    lmap[addr] = len(lmap)
            elif name in ("SSTORE", "SLOAD"):
                if popped[0] is not None:
                    k = max(k, popped[0])
            elif name == "CALLDATALOAD":
                if popped[0] is not None:
                    md.add(popped[0])
            elif name in BLOCKCHAIN_READS:
                named.add(BLOCKCHAIN_READS[name])
    return VarLayout(
        k=k,
        r=len(lmap) - 1,
        lmap=lmap,
        md_offsets=tuple(sorted(md)),
        md_count=len(md),
        named_bc=tuple(sorted(named)),
    )


def tau(instr, state: TranslationState, layout: VarLayout) -> list[Statement]:
    """Translate one instruction, updating the stack cursor ``state.m``."""
    op = instr.opcode
    name = op.mnemonic
    m = state.m
    if m + 1 < op.delta:
        raise StackUnderflow(state.block_id, instr.offset)
    popped = state.consts.get(instr.offset, (None,) * op.delta)

    stmts: list[Statement] = [Nop(name)] if state.nops else []
    if name == "JUMPDEST":
        pass
    elif op.is_push:
        stmts.append(Assign(_s(m + 1), Num(instr.immediate)))
        state.m += 1
    elif name == "PC":
        stmts.append(Assign(_s(m + 1), Num(instr.offset)))
        state.m += 1
    elif op.is_dup:
        stmts.append(Assign(_s(m + 1), Var(_s(m + 1 - op.pair_index))))
        state.m += 1
    elif op.is_swap:
        n = op.pair_index
        stmts += [
            Assign(_s(m + 1), Var(_s(m))),
            Assign(_s(m), Var(_s(m - n))),
            Assign(_s(m - n), Var(_s(m + 1))),
        ]
    elif name in _BINOPS:
        stmts.append(Assign(_s(m - 1), BinOp(_BINOPS[name], Var(_s(m)), Var(_s(m - 1)))))
        state.m -= 1
    elif name in _BITOPS:
        stmts.append(Assign(_s(m - 1), BitOp(_BITOPS[name], Var(_s(m)), Var(_s(m - 1)))))
        state.m -= 1
    elif name == "NOT":
        stmts.append(Assign(_s(m), Not(Var(_s(m)))))
    elif name == "POP":
        state.m -= 1
    elif name == "SLOAD":
        key = popped[0]
        if key is not None and key <= layout.k:
            stmts.append(Assign(_s(m), Var(f"g{key}")))
        else:
            stmts += [Assign("gl", Var(_s(m))), Assign(_s(m), state.fresh())]
    elif name == "MLOAD":
        addr = popped[0]
        if addr is not None and addr in layout.lmap:
            stmts.append(Assign(_s(m), Var(f"l{layout.lmap[addr]}")))
        else:
            stmts += [Assign("ll", Var(_s(m))), Assign(_s(m), state.fresh())]
    elif name == "SSTORE":
        key = popped[0]
        if key is not None and key <= layout.k:
            stmts.append(Assign(f"g{key}", Var(_s(m - 1))))
        else:
            stmts += [Assign("gs1", Var(_s(m - 1))), Assign("gs2", Var(_s(m)))]
        state.m -= 2
    elif name == "MSTORE":
        addr = popped[0]
        if addr is not None and addr in layout.lmap:
            stmts.append(Assign(f"l{layout.lmap[addr]}", Var(_s(m - 1))))
        else:
            stmts += [Assign("ls1", Var(_s(m - 1))), Assign("ls2", Var(_s(m)))]
        state.m -= 2
    elif name == "CALLDATALOAD":
        offset = popped[0]
        if offset is not None and offset in layout.md_offsets:
            idx = layout.md_offsets.index(offset)
            stmts.append(Assign(_s(m), Var(f"md{idx}")))
        else:
            stmts.append(Assign(_s(m), state.fresh()))
    elif name in BLOCKCHAIN_READS:
        stmts.append(Assign(_s(m + 1), Var(BLOCKCHAIN_READS[name])))
        state.m += 1
    elif name in _MEM_WRITERS:
        stmts += _havoc_memory(instr, popped, state, layout)
        state.m -= op.delta
    else:
        # Opaque effect: consume the operands, produce unknown results.
        state.m -= op.delta
        for _ in range(op.alpha):
            state.m += 1
            stmts.append(Assign(_s(state.m), state.fresh()))
    return stmts


def _havoc_memory(instr, popped, state: TranslationState, layout: VarLayout):
    """Invalidate the local variables a copy-style write may touch."""
    dest_idx, len_idx = _MEM_WRITERS[instr.mnemonic]
    dest = popped[dest_idx]
    length = 1 if len_idx is None else popped[len_idx]
    if dest is None or length is None:
        log.warning(
            "memory effect of %s at offset %d not modeled (non-constant range)",
            instr.mnemonic,
            instr.offset,
        )
        return []
    stmts = []
    for addr in sorted(layout.lmap):
        if dest <= addr < dest + length:
            stmts.append(Assign(f"l{layout.lmap[addr]}", state.fresh()))
    if not stmts:
        log.warning(
            "%s at offset %d writes outside the tracked memory words",
            instr.mnemonic,
            instr.offset,
        )
    return stmts


def tau_G(window, state: TranslationState) -> tuple[Guard, Guard]:
    """Translate a guard window into (taken, fallthrough) guards.

    Recognizes one comparison optionally followed by ISZEROs, or a bare
    ISZERO chain; every ISZERO swaps the pair.  Raises UnsupportedGuard on
    anything else (including an empty window).
    """
    m = state.m
    if window and window[0].mnemonic in _CMP_GUARDS:
        if any(ins.mnemonic != "ISZERO" for ins in window[1:]):
            raise UnsupportedGuard(f"window {[i.mnemonic for i in window]}")
        if m < 1:
            raise StackUnderflow(state.block_id, window[0].offset)
        taken = Guard(_CMP_GUARDS[window[0].mnemonic], Var(_s(m)), Var(_s(m - 1)))
        if len(window) % 2 == 0:  # odd number of trailing ISZEROs
            taken = taken.negated()
        state.m -= 2
    elif window and all(ins.mnemonic == "ISZERO" for ins in window):
        if m < 0:
            raise StackUnderflow(state.block_id, window[0].offset)
        relation = "eq" if len(window) % 2 == 1 else "neq"
        taken = Guard(relation, Var(_s(m)), Num(0))
        state.m -= 1
    else:
        raise UnsupportedGuard(f"window {[i.mnemonic for i in window]}")
    return taken, taken.negated()


def translate_block(block: Block, layout: VarLayout, *, nops: bool = False) -> list[Rule]:
    """Apply the translation to one live block (1 rule, or 3 for JumpI)."""
    if block.entry_height is None:
        raise ValueError(f"block {block.id} has no entry height (dead?)")
    state = TranslationState(
        m=block.entry_height - 1,
        block_id=block.id,
        nops=nops,
        consts={
            ins.offset: ops
            for ins, ops in zip(block.instrs, block.const_operands or [])
        },
    )
    instrs = block.instrs
    term = block.terminator
    name = f"block_{block.id}"
    height = block.entry_height
    body: list[Statement] = []

    def run_tau(seq) -> None:
        for ins in seq:
            body.extend(tau(ins, state, layout))

    def mark_nops(seq) -> None:
        if nops:
            body.extend(Nop(ins.mnemonic) for ins in seq)

    if isinstance(term, Jump):
        target_pc = id_sort_key(term.target)[0]
        elide = (
            len(instrs) >= 2
            and instrs[-2].opcode.is_push
            and instrs[-2].immediate == target_pc
        )
        run_tau(instrs[:-2] if elide else instrs[:-1])
        if not elide:
            state.m -= 1  # target reached the stack earlier: drop it
        mark_nops(instrs[-2:] if elide else instrs[-1:])
        cont = Call(f"block_{term.target}", state.m + 1)
        return [Rule(name, height, layout, None, body, cont)]

    if isinstance(term, JumpI):
        return _translate_jumpi(block, layout, state, body, nops)

    if isinstance(term, FallThrough):
        run_tau(instrs)
        cont = Call(f"block_{term.target}", state.m + 1)
        return [Rule(name, height, layout, None, body, cont)]

    run_tau(instrs)
    return [Rule(name, height, layout, None, body, None)]


def _translate_jumpi(block, layout, state, body, nops) -> list[Rule]:
    instrs = block.instrs
    term = block.terminator
    name = f"block_{block.id}"
    jump_name = f"jump_{block.id}"
    last = len(instrs) - 1
    taken_pc = id_sort_key(term.taken)[0]
    has_push = (
        last >= 1
        and instrs[last - 1].opcode.is_push
        and instrs[last - 1].immediate == taken_pc
    )
    if has_push:
        j = last - 2
        while j >= 0 and instrs[j].mnemonic == "ISZERO":
            j -= 1
        c = j if j >= 0 and instrs[j].mnemonic in _CMP_GUARDS else j + 1
        window, rest = instrs[c : last - 1], instrs[c:]
    else:
        window, rest = None, instrs[last:]
        c = last

    for ins in instrs[:c]:
        body.extend(tau(ins, state, layout))
    if window is None:
        state.m -= 1  # branch target came from the stack: drop it

    try:
        if window is None:
            raise UnsupportedGuard("branch target not pushed in block")
        taken_guard, fall_guard = tau_G(window, state)
    except UnsupportedGuard:
        # Condition is a plain value: guard directly on it being nonzero.
        if window:
            for ins in window:
                body.extend(tau(ins, state, layout))
        if state.m < 0:
            raise StackUnderflow(block.id, instrs[last].offset)
        taken_guard = Guard("neq", Var(_s(state.m)), Num(0))
        fall_guard = taken_guard.negated()
        state.m -= 1
        log.warning("block %s: no guard pattern, testing the raw condition", block.id)

    # Stack params of the jump_ pair: everything live when the block rule
    # hands over, i.e. the guard operands are the top slots.
    hand_over = _guard_entry_height(taken_guard, state.m)
    if nops:
        body.extend(Nop(ins.mnemonic) for ins in rest)
    rules = [
        Rule(name, block.entry_height, layout, None, body, Call(jump_name, hand_over)),
        Rule(
            jump_name,
            hand_over,
            layout,
            taken_guard,
            [],
            Call(f"block_{term.taken}", state.m + 1),
        ),
        Rule(
            jump_name,
            hand_over,
            layout,
            fall_guard,
            [],
            Call(f"block_{term.fallthrough}", state.m + 1),
        ),
    ]
    return rules


def _guard_entry_height(guard: Guard, m_after: int) -> int:
    consumed = 2 if isinstance(guard.rhs, Var) else 1
    return m_after + 1 + consumed


def translate_cfg(cfg: Cfg, *, nops: bool = False) -> list[Rule]:
    """Translate every live block, sharing one variable layout."""
    layout = build_layout(cfg)
    rules: list[Rule] = []
    for block in cfg.live_blocks():
        rules.extend(translate_block(block, layout, nops=nops))
    return rules
