"""Concrete mini-EVM used as differential-testing ground truth.

Executes the deterministic opcode subset with real 256-bit wrap-around
semantics and records every basic-block entry PC.  Memory is word-granular
(a map from the exact address used to a 256-bit value), matching the model
the rules are checked against.  Hashing, calls, contract creation and logs
are not interpreted: programs fed to the oracle must avoid them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .asm import disassemble
from .errors import EvmFault, StepLimitExceeded, UnsupportedOpcode

_MASK = (1 << 256) - 1

# Opcodes pushing one environment quantity, and the key it is read from.
_ENV_READS = {
    "ADDRESS": "address",
    "ORIGIN": "origin",
    "CALLER": "caller",
    "CALLVALUE": "callvalue",
    "GASPRICE": "gasprice",
    "COINBASE": "coinbase",
    "TIMESTAMP": "timestamp",
    "NUMBER": "number",
    "DIFFICULTY": "difficulty",
    "GASLIMIT": "gaslimit",
    "GAS": "gas",
}


@dataclass
class MachineState:
    """Concrete machine state; stack top is the last element."""

    stack: list[int] = field(default_factory=list)
    memory: dict[int, int] = field(default_factory=dict)
    storage: dict[int, int] = field(default_factory=dict)
    calldata: bytes = b""
    env: dict[str, int] = field(default_factory=dict)
    halted: bool = False
    pc: int = 0

    def push(self, value: int) -> None:
        if len(self.stack) >= 1024:
            raise EvmFault("stack overflow")
        self.stack.append(value & _MASK)

    def pop(self) -> int:
        if not self.stack:
            raise EvmFault("stack underflow")
        return self.stack.pop()


def _signed(x: int) -> int:
    return x - (1 << 256) if x >= (1 << 255) else x


def _unsigned(x: int) -> int:
    return x & _MASK


def run_evm(
    code: bytes,
    calldata: bytes = b"",
    env: dict[str, int] | None = None,
    step_limit: int = 10**6,
    storage: dict[int, int] | None = None,
) -> tuple[MachineState, list[int]]:
    """Execute ``code``; returns the final state and the block-entry trace.

    Halts on STOP/RETURN/REVERT/INVALID or when execution runs off the end
    of the code (implicit STOP).  Raises StepLimitExceeded after
    ``step_limit`` instructions, UnsupportedOpcode outside the subset, and
    EvmFault on stack violations or invalid jumps.
    """
    instrs = disassemble(code)
    by_offset = {i.offset: i for i in instrs}
    leaders = _block_leaders(instrs)
    jumpdests = {i.offset for i in instrs if i.mnemonic == "JUMPDEST"}

    s = MachineState(calldata=calldata, env=dict(env or {}), storage=dict(storage or {}))
    trace: list[int] = []
    steps = 0
    pc = 0
    while True:
        if pc >= len(code):
            s.halted = True  # implicit STOP
            s.pc = pc
            break
        if pc in leaders:
            trace.append(pc)
        ins = by_offset[pc]
        steps += 1
        if steps > step_limit:
            s.pc = pc
            raise StepLimitExceeded(f"no halt within {step_limit} steps")
        next_pc = pc + ins.size
        name = ins.mnemonic
        op = ins.opcode

        if op.is_push:
            s.push(ins.immediate)
        elif op.is_dup:
            n = op.pair_index
            if len(s.stack) < n:
                raise EvmFault("stack underflow")
            s.push(s.stack[-n])
        elif op.is_swap:
            n = op.pair_index
            if len(s.stack) < n + 1:
                raise EvmFault("stack underflow")
            s.stack[-1], s.stack[-1 - n] = s.stack[-1 - n], s.stack[-1]
        elif name == "POP":
            s.pop()
        elif name == "JUMPDEST":
            pass
        elif name == "JUMP":
            dest = s.pop()
            if dest not in jumpdests:
                raise EvmFault(f"invalid jump target {dest}")
            next_pc = dest
        elif name == "JUMPI":
            dest, cond = s.pop(), s.pop()
            if cond != 0:
                if dest not in jumpdests:
                    raise EvmFault(f"invalid jump target {dest}")
                next_pc = dest
        elif name == "PC":
            s.push(pc)
        elif name in ("STOP", "INVALID") or op.is_invalid_class:
            s.halted = True
            s.pc = pc
            break
        elif name in ("RETURN", "REVERT"):
            s.pop(), s.pop()
            s.halted = True
            s.pc = pc
            break
        elif name in _ENV_READS:
            s.push(s.env.get(_ENV_READS[name], 0))
        elif name == "CALLDATASIZE":
            s.push(len(s.calldata))
        elif name == "CALLDATALOAD":
            offset = s.pop()
            word = bytes(
                s.calldata[offset + i] if offset + i < len(s.calldata) else 0
                for i in range(32)
            )
            s.push(int.from_bytes(word, "big"))
        elif name == "MLOAD":
            s.push(s.memory.get(s.pop(), 0))
        elif name == "MSTORE":
            addr, value = s.pop(), s.pop()
            s.memory[addr] = value
        elif name == "SLOAD":
            s.push(s.storage.get(s.pop(), 0))
        elif name == "SSTORE":
            key, value = s.pop(), s.pop()
            s.storage[key] = value
        elif name in _ALU:
            fn, arity = _ALU[name]
            if len(s.stack) < arity:
                raise EvmFault("stack underflow")
            args = [s.pop() for _ in range(arity)]
            s.push(fn(*args))
        else:
            s.pc = pc
            raise UnsupportedOpcode(name)
        pc = next_pc
    return s, trace


def _block_leaders(instrs) -> set[int]:
    if not instrs:
        return set()
    leaders = {instrs[0].offset}
    prev_terminates = False
    for ins in instrs:
        if prev_terminates or ins.mnemonic == "JUMPDEST":
            leaders.add(ins.offset)
        prev_terminates = ins.opcode.is_terminator
    return leaders


def _div(a: int, b: int) -> int:
    return 0 if b == 0 else a // b


def _sdiv(a: int, b: int) -> int:
    if b == 0:
        return 0
    sa, sb = _signed(a), _signed(b)
    q = abs(sa) // abs(sb)
    return _unsigned(-q if (sa < 0) != (sb < 0) else q)


def _mod(a: int, b: int) -> int:
    return 0 if b == 0 else a % b


def _smod(a: int, b: int) -> int:
    if b == 0:
        return 0
    sa, sb = _signed(a), _signed(b)
    r = abs(sa) % abs(sb)
    return _unsigned(-r if sa < 0 else r)


def _signextend(b: int, x: int) -> int:
    if b >= 31:
        return x
    bit = 8 * b + 7
    mask = (1 << (bit + 1)) - 1
    return x | (_MASK ^ mask) if x & (1 << bit) else x & mask


def _byte(i: int, x: int) -> int:
    return (x >> (8 * (31 - i))) & 0xFF if i < 32 else 0


# name -> (function over popped operands in pop order, arity)
_ALU = {
    "ADD": (lambda a, b: a + b, 2),
    "MUL": (lambda a, b: a * b, 2),
    "SUB": (lambda a, b: a - b, 2),
    "DIV": (_div, 2),
    "SDIV": (_sdiv, 2),
    "MOD": (_mod, 2),
    "SMOD": (_smod, 2),
    "ADDMOD": (lambda a, b, n: 0 if n == 0 else (a + b) % n, 3),
    "MULMOD": (lambda a, b, n: 0 if n == 0 else (a * b) % n, 3),
    "EXP": (lambda a, b: pow(a, b, 1 << 256), 2),
    "SIGNEXTEND": (_signextend, 2),
    "LT": (lambda a, b: int(a < b), 2),
    "GT": (lambda a, b: int(a > b), 2),
    "SLT": (lambda a, b: int(_signed(a) < _signed(b)), 2),
    "SGT": (lambda a, b: int(_signed(a) > _signed(b)), 2),
    "EQ": (lambda a, b: int(a == b), 2),
    "ISZERO": (lambda a: int(a == 0), 1),
    "AND": (lambda a, b: a & b, 2),
    "OR": (lambda a, b: a | b, 2),
    "XOR": (lambda a, b: a ^ b, 2),
    "NOT": (lambda a: a ^ _MASK, 1),
    "BYTE": (_byte, 2),
    "SHL": (lambda a, b: b << a if a < 256 else 0, 2),
    "SHR": (lambda a, b: b >> a if a < 256 else 0, 2),
    "SAR": (lambda a, b: _unsigned(_signed(b) >> min(a, 255)), 2),
}
