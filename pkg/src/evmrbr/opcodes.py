"""Opcode table for one fixed EVM instruction-set revision (Constantinople).

Every byte value decodes to exactly one opcode: bytes without an assigned
meaning map to a synthetic halting opcode named ``INVALID_xx`` so that
disassembly is total (deployed contracts routinely carry metadata trailers
that are not code).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Opcode:
    """One opcode: byte value, stack effect and inline-data size.

    ``delta`` is the number of stack items consumed, ``alpha`` the number
    produced.  ``immediate_len`` is nonzero only for PUSH1..PUSH32.
    """

    mnemonic: str
    code: int
    delta: int
    alpha: int
    immediate_len: int = 0

    @property
    def is_push(self) -> bool:
        return 0x60 <= self.code <= 0x7F

    @property
    def is_dup(self) -> bool:
        return 0x80 <= self.code <= 0x8F

    @property
    def is_swap(self) -> bool:
        return 0x90 <= self.code <= 0x9F

    @property
    def pair_index(self) -> int:
        """N of PUSHN/DUPN/SWAPN/LOGN."""
        if self.is_push:
            return self.code - 0x5F
        if self.is_dup:
            return self.code - 0x7F
        if self.is_swap:
            return self.code - 0x8F
        if 0xA0 <= self.code <= 0xA4:
            return self.code - 0xA0
        raise ValueError(f"{self.mnemonic} has no numeric suffix")

    @property
    def is_invalid_class(self) -> bool:
        return self.mnemonic == "INVALID" or self.mnemonic.startswith("INVALID_")

    @property
    def halts(self) -> bool:
        return self.mnemonic in _HALTING or self.is_invalid_class

    @property
    def is_terminator(self) -> bool:
        """True when the opcode ends a basic block."""
        return self.mnemonic in ("JUMP", "JUMPI") or self.halts


_HALTING = frozenset({"STOP", "RETURN", "REVERT", "INVALID", "SELFDESTRUCT"})

# (code, mnemonic, delta, alpha) for everything outside the PUSH/DUP/SWAP/LOG
# ranges, which are generated below.
_BASE = [
    (0x00, "STOP", 0, 0),
    (0x01, "ADD", 2, 1),
    (0x02, "MUL", 2, 1),
    (0x03, "SUB", 2, 1),
    (0x04, "DIV", 2, 1),
    (0x05, "SDIV", 2, 1),
    (0x06, "MOD", 2, 1),
    (0x07, "SMOD", 2, 1),
    (0x08, "ADDMOD", 3, 1),
    (0x09, "MULMOD", 3, 1),
    (0x0A, "EXP", 2, 1),
    (0x0B, "SIGNEXTEND", 2, 1),
    (0x10, "LT", 2, 1),
    (0x11, "GT", 2, 1),
    (0x12, "SLT", 2, 1),
    (0x13, "SGT", 2, 1),
    (0x14, "EQ", 2, 1),
    (0x15, "ISZERO", 1, 1),
    (0x16, "AND", 2, 1),
    (0x17, "OR", 2, 1),
    (0x18, "XOR", 2, 1),
    (0x19, "NOT", 1, 1),
    (0x1A, "BYTE", 2, 1),
    (0x1B, "SHL", 2, 1),
    (0x1C, "SHR", 2, 1),
    (0x1D, "SAR", 2, 1),
    (0x20, "SHA3", 2, 1),
    (0x30, "ADDRESS", 0, 1),
    (0x31, "BALANCE", 1, 1),
    (0x32, "ORIGIN", 0, 1),
    (0x33, "CALLER", 0, 1),
    (0x34, "CALLVALUE", 0, 1),
    (0x35, "CALLDATALOAD", 1, 1),
    (0x36, "CALLDATASIZE", 0, 1),
    (0x37, "CALLDATACOPY", 3, 0),
    (0x38, "CODESIZE", 0, 1),
    (0x39, "CODECOPY", 3, 0),
    (0x3A, "GASPRICE", 0, 1),
    (0x3B, "EXTCODESIZE", 1, 1),
    (0x3C, "EXTCODECOPY", 4, 0),
    (0x3D, "RETURNDATASIZE", 0, 1),
    (0x3E, "RETURNDATACOPY", 3, 0),
    (0x3F, "EXTCODEHASH", 1, 1),
    (0x40, "BLOCKHASH", 1, 1),
    (0x41, "COINBASE", 0, 1),
    (0x42, "TIMESTAMP", 0, 1),
    (0x43, "NUMBER", 0, 1),
    (0x44, "DIFFICULTY", 0, 1),
    (0x45, "GASLIMIT", 0, 1),
    (0x50, "POP", 1, 0),
    (0x51, "MLOAD", 1, 1),
    (0x52, "MSTORE", 2, 0),
    (0x53, "MSTORE8", 2, 0),
    (0x54, "SLOAD", 1, 1),
    (0x55, "SSTORE", 2, 0),
    (0x56, "JUMP", 1, 0),
    (0x57, "JUMPI", 2, 0),
    (0x58, "PC", 0, 1),
    (0x59, "MSIZE", 0, 1),
    (0x5A, "GAS", 0, 1),
    (0x5B, "JUMPDEST", 0, 0),
    (0xF0, "CREATE", 3, 1),
    (0xF1, "CALL", 7, 1),
    (0xF2, "CALLCODE", 7, 1),
    (0xF3, "RETURN", 2, 0),
    (0xF4, "DELEGATECALL", 6, 1),
    (0xF5, "CREATE2", 4, 1),
    (0xFA, "STATICCALL", 6, 1),
    (0xFD, "REVERT", 2, 0),
    (0xFE, "INVALID", 0, 0),
    (0xFF, "SELFDESTRUCT", 1, 0),
]


def _build_table() -> dict[int, Opcode]:
    table = {}
    for code, name, delta, alpha in _BASE:
        table[code] = Opcode(name, code, delta, alpha)
    for n in range(1, 33):
        code = 0x5F + n
        table[code] = Opcode(f"PUSH{n}", code, 0, 1, immediate_len=n)
    for n in range(1, 17):
        code = 0x7F + n
        table[code] = Opcode(f"DUP{n}", code, n, n + 1)
        code = 0x8F + n
        table[code] = Opcode(f"SWAP{n}", code, n + 1, n + 1)
    for n in range(0, 5):
        code = 0xA0 + n
        table[code] = Opcode(f"LOG{n}", code, n + 2, 0)
    return table


TABLE: dict[int, Opcode] = _build_table()

_INVALID_CLASS: dict[int, Opcode] = {
    b: Opcode(f"INVALID_{b:02x}", b, 0, 0) for b in range(256) if b not in TABLE
}

BY_NAME: dict[str, Opcode] = {
    op.mnemonic: op for op in (*TABLE.values(), *_INVALID_CLASS.values())
}


def for_byte(b: int) -> Opcode:
    """Decode one byte value; total over 0x00..0xFF."""
    return TABLE.get(b) or _INVALID_CLASS[b]


# Opcodes reading one quantity of the transaction or chain environment,
# mapped to the variable name under which that quantity is threaded
# through the rules.
BLOCKCHAIN_READS: dict[str, str] = {
    "GAS": "gas",
    "NUMBER": "number",
    "TIMESTAMP": "timestamp",
    "CALLER": "caller",
    "CALLVALUE": "callvalue",
    "ADDRESS": "address",
    "ORIGIN": "origin",
    "CALLDATASIZE": "calldatasize",
    "GASPRICE": "gasprice",
    "COINBASE": "coinbase",
    "DIFFICULTY": "difficulty",
    "GASLIMIT": "gaslimit",
}
