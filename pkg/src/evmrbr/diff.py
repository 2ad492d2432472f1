"""Differential check: concrete machine vs. translated rules.

For random input vectors (calldata, environment, initial storage) the
bytecode is executed by the concrete interpreter and the translated rules
by the rule interpreter; the two must agree on final storage at constant
keys, final tracked memory words, and the sequence of blocks visited.
Inputs are drawn below 2**16 so programs built for the check stay inside
the overflow-free regime where wrap-around and unbounded arithmetic
coincide.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .asm import disassemble
from .cfg import Cfg, FallThrough, Jump, JumpI, id_sort_key, resolve_cfg, split_blocks
from .errors import EvmRbrError
from .evm_exec import run_evm
from .rbr import Rule, rule_sort_key
from .rbr_exec import run_rbr
from .translate import translate_cfg

INPUT_BOUND = 1 << 16

_ENV_NAMES = (
    "address",
    "caller",
    "callvalue",
    "coinbase",
    "difficulty",
    "gas",
    "gaslimit",
    "gasprice",
    "number",
    "origin",
    "timestamp",
)


@dataclass
class Divergence:
    case: int
    quantity: str
    evm: str
    rbr: str

    def line(self) -> str:
        return f"case {self.case}: {self.quantity} evm={self.evm} rbr={self.rbr}"


@dataclass
class DiffReport:
    n_cases: int
    divergences: list[Divergence] = field(default_factory=list)
    executed_rules: set[str] = field(default_factory=set)

    @property
    def agreed(self) -> bool:
        return not self.divergences

    def text(self) -> str:
        lines = [d.line() for d in self.divergences]
        lines.append(f"divergences: {len(self.divergences)}/{self.n_cases}")
        return "\n".join(lines) + "\n"


def differential_check(
    code: bytes,
    n_cases: int = 20,
    seed: int = 0,
    rules: list[Rule] | None = None,
    step_limit: int = 10**6,
) -> DiffReport:
    """Run ``n_cases`` random vectors through both interpreters.

    ``rules`` overrides the translation (used to prove the harness catches
    corrupted rule sets).  Divergences and rule-interpreter failures are
    report content; concrete-interpreter failures raise, since they mean
    the program is outside the oracle's subset.
    """
    cfg = resolve_cfg(split_blocks(disassemble(code)))
    if cfg.entry is None:
        raise EvmRbrError("empty bytecode")
    if cfg.unresolved:
        raise EvmRbrError(f"cannot check code with unresolved jumps: {cfg.unresolved}")
    if rules is None:
        rules = translate_cfg(cfg)
    layout = rules[0].layout
    entry_rule = f"block_{cfg.entry}"
    pc_edges = _pc_edges(cfg)

    rng = random.Random(seed)
    report = DiffReport(n_cases=n_cases)
    for case in range(n_cases):
        calldata = _make_calldata(layout, rng)
        env = {name: rng.randrange(INPUT_BOUND) for name in _ENV_NAMES}
        storage = {i: rng.randrange(INPUT_BOUND) for i in range(layout.k + 1)}
        fresh_seed = rng.randrange(1 << 30)

        evm_state, evm_trace = run_evm(
            code, calldata, env, step_limit=step_limit, storage=dict(storage)
        )
        init = _initial_bindings(layout, calldata, env, storage)
        try:
            rbr_state, rule_trace = run_rbr(
                rules, init, step_limit=step_limit, entry=entry_rule, fresh_seed=fresh_seed
            )
        except EvmRbrError as err:
            report.divergences.append(
                Divergence(case, "rule-run", "halt", f"{type(err).__name__}: {err}")
            )
            continue

        report.executed_rules.update(rule_trace)
        _compare(case, layout, evm_state, evm_trace, rbr_state, rule_trace, pc_edges, report)
    return report


def _make_calldata(layout, rng: random.Random) -> bytes:
    if not layout.md_offsets:
        return b""
    size = max(layout.md_offsets) + 32
    data = bytearray(size)
    for offset in layout.md_offsets:
        data[offset : offset + 32] = rng.randrange(INPUT_BOUND).to_bytes(32, "big")
    return bytes(data)


def _initial_bindings(layout, calldata: bytes, env, storage) -> dict[str, int]:
    init = {f"g{i}": storage[i] for i in range(layout.k + 1)}
    for i in range(layout.r + 1):
        init[f"l{i}"] = 0
    for i, offset in enumerate(layout.md_offsets):
        word = calldata[offset : offset + 32].ljust(32, b"\0")
        init[f"md{i}"] = int.from_bytes(word, "big")
    for name in layout.named_bc:
        init[name] = len(calldata) if name == "calldatasize" else env[name]
    return init


def _pc_edges(cfg: Cfg) -> set[tuple[int, int]]:
    edges = set()
    for block in cfg.live_blocks():
        pc = block.start_pc
        term = block.terminator
        targets = []
        if isinstance(term, Jump):
            targets = [term.target]
        elif isinstance(term, JumpI):
            targets = [term.taken, term.fallthrough]
        elif isinstance(term, FallThrough):
            targets = [term.target]
        for target in targets:
            edges.add((pc, id_sort_key(target)[0]))
    return edges


def _compare(case, layout, evm_state, evm_trace, rbr_state, rule_trace, pc_edges, report):
    for i in range(layout.k + 1):
        expected = evm_state.storage.get(i, 0)
        got = rbr_state.bindings.get(f"g{i}")
        if got != expected:
            report.divergences.append(Divergence(case, f"g{i}", str(expected), str(got)))
    for addr, idx in sorted(layout.lmap.items()):
        expected = evm_state.memory.get(addr, 0)
        got = rbr_state.bindings.get(f"l{idx}")
        if got != expected:
            report.divergences.append(Divergence(case, f"l{idx}", str(expected), str(got)))

    rule_pcs = [
        rule_sort_key(name)[0] for name in rule_trace if name.startswith("block_")
    ]
    if rule_pcs != evm_trace:
        report.divergences.append(
            Divergence(case, "trace", str(evm_trace), str(rule_pcs))
        )
    for src, dst in zip(evm_trace, evm_trace[1:]):
        if (src, dst) not in pc_edges:
            report.divergences.append(
                Divergence(case, "trace-path", f"{src}->{dst}", "no such edge")
            )
            break
