"""Well-formed bytecode builders for the test suite.

``Asm`` is a tiny two-pass assembler with labels (label pushes are always
PUSH2).  ``gen_program`` produces random programs whose jumps all resolve
and whose arithmetic provably stays below 2**64 for inputs below 2**16
(tracked with interval bounds), so the concrete machine never wraps and
the unbounded rule semantics must agree with it exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from evmrbr.diff import INPUT_BOUND
from evmrbr.opcodes import BY_NAME

# The interval tracking below proves results stay under this bound for
# inputs drawn below INPUT_BOUND, so the concrete machine never wraps.
SAFE_BOUND = 1 << 64

MD_OFFSETS = (0, 32, 64, 96)
MEM_ADDRS = (0, 32, 64, 96, 128)
STORAGE_KEYS = (0, 1, 2, 3)
ENV_OPS = (
    "ADDRESS",
    "CALLDATASIZE",
    "CALLER",
    "CALLVALUE",
    "COINBASE",
    "DIFFICULTY",
    "GAS",
    "GASLIMIT",
    "GASPRICE",
    "NUMBER",
    "ORIGIN",
    "TIMESTAMP",
)


class Asm:
    """Two-pass assembler: opcodes, minimal-width pushes, PUSH2 labels."""

    def __init__(self) -> None:
        self.items: list[tuple] = []
        self._label_counter = 0

    def op(self, mnemonic: str) -> "Asm":
        self.items.append(("op", BY_NAME[mnemonic].code))
        return self

    def push(self, value: int) -> "Asm":
        width = max(1, (value.bit_length() + 7) // 8)
        self.items.append(("push", width, value))
        return self

    def push_label(self, name: str) -> "Asm":
        self.items.append(("push_label", name))
        return self

    def label(self, name: str) -> "Asm":
        self.items.append(("label", name))
        return self

    def fresh_label(self, stem: str) -> str:
        self._label_counter += 1
        return f"{stem}{self._label_counter}"

    def assemble(self) -> bytes:
        offsets: dict[str, int] = {}
        pc = 0
        for item in self.items:
            if item[0] == "label":
                offsets[item[1]] = pc
            elif item[0] == "op":
                pc += 1
            elif item[0] == "push":
                pc += 1 + item[1]
            else:  # push_label
                pc += 3
        out = bytearray()
        for item in self.items:
            if item[0] == "op":
                out.append(item[1])
            elif item[0] == "push":
                _, width, value = item
                out.append(BY_NAME[f"PUSH{width}"].code)
                out += value.to_bytes(width, "big")
            elif item[0] == "push_label":
                out.append(BY_NAME["PUSH2"].code)
                out += offsets[item[1]].to_bytes(2, "big")
        return bytes(out)


@dataclass
class _Bounds:
    """Upper bounds of storage/memory contents as the program runs."""

    storage: dict[int, int] = field(default_factory=dict)
    memory: dict[int, int] = field(default_factory=dict)

    def storage_hi(self, key: int) -> int:
        return self.storage.get(key, INPUT_BOUND - 1)

    def memory_hi(self, addr: int) -> int:
        return self.memory.get(addr, 0)


def _build_value(asm: Asm, rng: random.Random, bounds: _Bounds, depth: int) -> tuple[int, int]:
    """Emit code leaving one value on the stack; returns its [lo, hi] bounds."""
    if depth <= 0 or rng.random() < 0.4:
        kind = rng.choice(("const", "calldata", "env", "sload", "mload", "pc"))
        if kind == "const":
            value = rng.randrange(INPUT_BOUND)
            asm.push(value)
            return value, value
        if kind == "calldata":
            asm.push(rng.choice(MD_OFFSETS)).op("CALLDATALOAD")
            return 0, INPUT_BOUND - 1
        if kind == "env":
            asm.op(rng.choice(ENV_OPS))
            return 0, INPUT_BOUND - 1
        if kind == "sload":
            key = rng.choice(STORAGE_KEYS)
            asm.push(key).op("SLOAD")
            return 0, bounds.storage_hi(key)
        if kind == "pc":
            asm.op("PC")  # code offsets stay below the label width (2 bytes)
            return 0, (1 << 16) - 1
        addr = rng.choice(MEM_ADDRS)
        asm.push(addr).op("MLOAD")
        return 0, bounds.memory_hi(addr)

    for _ in range(8):
        # Build both operands speculatively; keep them only if the result
        # provably stays in the overflow-free range.
        op = rng.choice(("ADD", "MUL", "SUB", "DIV", "MOD", "AND", "OR", "XOR", "EXP"))
        probe = random.Random(rng.getrandbits(32))
        scratch = Asm()
        rlo, rhi = _build_value(scratch, probe, bounds, depth - 1)
        llo, lhi = _build_value(scratch, probe, bounds, depth - 1)
        lo, hi = _combine(op, (llo, lhi), (rlo, rhi))
        if lo is not None and hi < SAFE_BOUND:
            asm.items.extend(scratch.items)
            asm.op(op)
            return lo, hi
    value = rng.randrange(INPUT_BOUND)
    asm.push(value)
    return value, value


def _combine(op: str, left: tuple[int, int], right: tuple[int, int]):
    """Interval bounds of ``left op right`` (left is the stack top)."""
    llo, lhi = left
    rlo, rhi = right
    if op == "ADD":
        return llo + rlo, lhi + rhi
    if op == "MUL":
        return llo * rlo, lhi * rhi
    if op == "SUB":
        if llo >= rhi:
            return llo - rhi, lhi - rlo
        return None, 0
    if op == "DIV":
        return 0, lhi
    if op == "MOD":
        return 0, min(lhi, max(rhi - 1, 0))
    if op == "AND":
        return 0, min(lhi, rhi)
    if op in ("OR", "XOR"):
        return 0, (1 << max(lhi.bit_length(), rhi.bit_length())) - 1
    if op == "EXP":
        if lhi <= 16 and rhi <= 15:
            return 0, lhi**rhi if lhi else 1
        return None, 0
    raise ValueError(op)


def _seg_store(asm: Asm, rng: random.Random, bounds: _Bounds) -> None:
    # Bounds only widen: a conditional arm may not run, leaving old contents.
    _, hi = _build_value(asm, rng, bounds, depth=rng.randint(1, 3))
    if rng.random() < 0.5:
        key = rng.choice(STORAGE_KEYS)
        asm.push(key).op("SSTORE")
        bounds.storage[key] = max(bounds.storage_hi(key), hi)
    else:
        addr = rng.choice(MEM_ADDRS)
        asm.push(addr).op("MSTORE")
        bounds.memory[addr] = max(bounds.memory_hi(addr), hi)


def _seg_shuffle(asm: Asm, rng: random.Random, bounds: _Bounds) -> None:
    """Build a few values, permute them with DUP/SWAP, then drain the stack."""
    stack_hi = []
    for _ in range(rng.randint(2, 3)):
        _, hi = _build_value(asm, rng, bounds, depth=1)
        stack_hi.append(hi)
    for _ in range(rng.randint(1, 4)):
        n = len(stack_hi)
        ops = [("DUP1", 1), ("DUP2", 2), ("SWAP1", 2), ("SWAP2", 3)]
        name, _need = rng.choice([(o, k) for o, k in ops if n >= k])
        asm.op(name)
        if name == "DUP1":
            stack_hi.append(stack_hi[-1])
        elif name == "DUP2":
            stack_hi.append(stack_hi[-2])
        elif name == "SWAP1":
            stack_hi[-1], stack_hi[-2] = stack_hi[-2], stack_hi[-1]
        else:
            stack_hi[-1], stack_hi[-3] = stack_hi[-3], stack_hi[-1]
    while stack_hi:
        hi = stack_hi.pop()
        if rng.random() < 0.6:
            key = rng.choice(STORAGE_KEYS)
            asm.push(key).op("SSTORE")
            bounds.storage[key] = max(bounds.storage_hi(key), hi)
        else:
            asm.op("POP")


def _seg_diamond(asm: Asm, rng: random.Random, bounds: _Bounds) -> None:
    then_label = asm.fresh_label("then")
    join_label = asm.fresh_label("join")
    _build_value(asm, rng, bounds, depth=1)
    _build_value(asm, rng, bounds, depth=1)
    asm.op(rng.choice(("LT", "GT", "EQ", "SLT", "SGT")))
    if rng.random() < 0.4:
        asm.op("ISZERO")
    asm.push_label(then_label).op("JUMPI")
    _seg_store(asm, rng, bounds)
    asm.push_label(join_label).op("JUMP")
    asm.label(then_label).op("JUMPDEST")
    _seg_store(asm, rng, bounds)
    asm.label(join_label).op("JUMPDEST")


def _seg_loop(
    asm: Asm,
    rng: random.Random,
    bounds: _Bounds,
    n: int | None = None,
    key: int | None = None,
) -> None:
    """Counted loop: acc += i for i = n..1, then acc is stored."""
    loop = asm.fresh_label("loop")
    done = asm.fresh_label("done")
    n = rng.randint(1, 10) if n is None else n
    key = rng.choice(STORAGE_KEYS) if key is None else key
    asm.push(0)  # acc
    asm.push(n)  # i
    asm.label(loop).op("JUMPDEST")
    asm.op("DUP1").op("ISZERO").push_label(done).op("JUMPI")
    asm.op("DUP1").op("SWAP2").op("ADD").op("SWAP1")  # acc += i
    asm.push(1).op("SWAP1").op("SUB")  # i -= 1
    asm.push_label(loop).op("JUMP")
    asm.label(done).op("JUMPDEST")
    asm.op("POP")
    asm.push(key).op("SSTORE")
    bounds.storage[key] = max(bounds.storage_hi(key), n * (n + 1) // 2)


def gen_program(rng: random.Random, segments: int | None = None) -> bytes:
    """One random, fully resolvable, overflow-free program ending in STOP."""
    asm = Asm()
    bounds = _Bounds()
    count = rng.randint(2, 5) if segments is None else segments
    for _ in range(count):
        roll = rng.random()
        if roll < 0.45:
            _seg_store(asm, rng, bounds)
        elif roll < 0.60:
            _seg_shuffle(asm, rng, bounds)
        elif roll < 0.85:
            _seg_diamond(asm, rng, bounds)
        else:
            _seg_loop(asm, rng, bounds)
    asm.op("STOP")
    return asm.assemble()


def make_loops(n_loops: int, body_n: int = 3) -> bytes:
    """A program containing exactly ``n_loops`` independent counted loops.

    Each loop stores its sum to its own storage key, so every loop's effect
    stays visible in the final state.
    """
    asm = Asm()
    bounds = _Bounds()
    rng = random.Random(n_loops)
    for i in range(n_loops):
        _seg_loop(asm, rng, bounds, n=body_n + i, key=i)
    asm.op("STOP")
    return asm.assemble()
