"""Decode raw bytecode into typed instructions and back.

Decoding is total: every byte value is an opcode (unknown ones are
INVALID-class, see :mod:`evmrbr.opcodes`).  The only hard error is a PUSH
whose immediate bytes run past the end of the code.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InconsistentOffsets, NonHexCharacter, OddDigitCount, TruncatedPush
from .opcodes import Opcode, for_byte


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction at a fixed byte offset.

    ``immediate`` is the unsigned big-endian value of the inline bytes and
    is None exactly when the opcode carries no immediate.
    """

    offset: int
    opcode: Opcode
    immediate: int | None = None

    @property
    def size(self) -> int:
        return 1 + self.opcode.immediate_len

    @property
    def mnemonic(self) -> str:
        return self.opcode.mnemonic

    def __str__(self) -> str:
        if self.immediate is None:
            return f"{self.offset}: {self.mnemonic}"
        return f"{self.offset}: {self.mnemonic} 0x{self.immediate:x}"


def parse_hex(text: str) -> bytes:
    """Parse hex text into bytes.

    Accepts an optional leading ``0x`` and ignores ASCII whitespace.  An odd
    digit count or any other character is rejected.
    """
    digits = []
    positions = []
    body = text
    start = 0
    stripped = text.lstrip()
    if stripped[:2] in ("0x", "0X"):
        start = len(text) - len(stripped) + 2
    for pos in range(start, len(body)):
        ch = body[pos]
        if ch in " \t\r\n\f\v":
            continue
        if ch not in "0123456789abcdefABCDEF":
            raise NonHexCharacter(pos, ch)
        digits.append(ch)
        positions.append(pos)
    if len(digits) % 2 != 0:
        raise OddDigitCount()
    return bytes.fromhex("".join(digits))


def disassemble(code: bytes) -> list[Instruction]:
    """Decode every byte of ``code`` into an instruction stream."""
    instrs = []
    offset = 0
    n = len(code)
    while offset < n:
        op = for_byte(code[offset])
        immediate = None
        if op.immediate_len:
            end = offset + 1 + op.immediate_len
            if end > n:
                raise TruncatedPush(offset)
            immediate = int.from_bytes(code[offset + 1 : end], "big")
        instrs.append(Instruction(offset, op, immediate))
        offset += 1 + op.immediate_len
    return instrs


def assemble(instrs: list[Instruction]) -> bytes:
    """Encode an instruction stream back to bytes.

    The offset chain must be consistent (first at 0, each following the
    previous) so that the result disassembles to the same stream.
    """
    out = bytearray()
    expected = 0
    for ins in instrs:
        if ins.offset != expected:
            raise InconsistentOffsets(ins.offset, expected)
        out.append(ins.opcode.code)
        if ins.opcode.immediate_len:
            if ins.immediate is None or not 0 <= ins.immediate < (
                1 << (8 * ins.opcode.immediate_len)
            ):
                raise ValueError(f"immediate out of range at offset {ins.offset}")
            out += ins.immediate.to_bytes(ins.opcode.immediate_len, "big")
        expected += ins.size
    return bytes(out)


def format_listing(instrs: list[Instruction]) -> str:
    """Human-readable listing, one instruction per line."""
    return "\n".join(str(i) for i in instrs)
