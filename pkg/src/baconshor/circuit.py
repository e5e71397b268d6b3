"""Timestep-scheduled Clifford circuits with explicit idle locations.

A circuit is a list of timesteps, each a set of elementary operations on
distinct qubits.  Every qubit that is alive at a timestep (between its first
operation and its last, except across a measure/re-prepare gap) carries
exactly one operation there; waiting is an explicit ``idle`` operation.
Each operation is a fault location.

Classical nodes turn measurement-outcome parities into Pauli-frame updates.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Sequence

PREP_ZERO = "prep0"
PREP_PLUS = "prep+"
MEAS_Z = "measz"
MEAS_X = "measx"
CNOT = "cnot"
HADAMARD = "h"
IDLE = "idle"

OP_KINDS = (PREP_ZERO, PREP_PLUS, MEAS_Z, MEAS_X, CNOT, HADAMARD, IDLE)
PREPS = (PREP_ZERO, PREP_PLUS)
MEASUREMENTS = (MEAS_Z, MEAS_X)

# conjugation by a Hadamard on every qubit
_DUAL = {PREP_ZERO: PREP_PLUS, PREP_PLUS: PREP_ZERO, MEAS_Z: MEAS_X, MEAS_X: MEAS_Z}


class CircuitError(ValueError):
    """A circuit violates a structural invariant."""


@dataclass(frozen=True)
class Op:
    kind: str
    qubits: tuple[int, ...]
    tag: str | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in OP_KINDS:
            raise CircuitError(f"unknown operation {self.kind!r}")
        want = 2 if self.kind == CNOT else 1
        if len(self.qubits) != want or len(set(self.qubits)) != want:
            raise CircuitError(f"{self.kind} needs {want} distinct qubits, got {self.qubits}")
        if (self.kind in MEASUREMENTS) != (self.tag is not None):
            raise CircuitError("measurements, and only measurements, carry an outcome tag")

    def dual(self) -> Op:
        """This operation conjugated by Hadamards on its qubits."""
        if self.kind == CNOT:
            return Op(CNOT, self.qubits[::-1], self.tag, self.label)
        return Op(_DUAL.get(self.kind, self.kind), self.qubits, self.tag, self.label)

    def text(self) -> str:
        s = f"{self.kind} " + " ".join(f"q{q}" for q in self.qubits)
        return s + (f" >{self.tag}" if self.tag else "")


@dataclass(frozen=True)
class ClassicalNode:
    """Classical processing of measurement outcomes.

    ``checks[i]`` lists the outcome tags whose parity is syndrome bit ``i``.

    * ``decode``: repetition-decode the checks; apply ``pauli`` to
      ``targets[i]`` for every flipped position ``i``.  If ``confirm`` is
      given (the same checks from earlier rounds, concatenated), nothing is
      applied unless every round agrees bit for bit.
    * ``logical``: the parity of ``raw`` is an (unprocessed) logical outcome;
      after repetition decoding of the checks, apply ``pauli`` on every
      qubit of ``targets`` if the corrected logical bit is 1.
    * ``verify``: a single check that must read 0; otherwise the locations in
      ``discard`` are re-run fault-free (ideal re-preparation).

    Frame updates land after timestep ``apply_after``.
    """

    name: str
    kind: str
    checks: tuple[tuple[str, ...], ...]
    pauli: str = ""
    targets: tuple[int, ...] = ()
    raw: tuple[str, ...] = ()
    apply_after: int = -1
    discard: tuple[int, ...] = ()
    confirm: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("decode", "logical", "verify"):
            raise CircuitError(f"unknown node kind {self.kind!r}")
        if self.kind == "verify":
            if len(self.checks) != 1:
                raise CircuitError("a verify node has exactly one check")
        else:
            if self.pauli not in ("X", "Z"):
                raise CircuitError("frame updates are X or Z")
            if self.kind == "decode" and len(self.targets) != len(self.checks) + 1:
                raise CircuitError("decode node needs one target per repetition position")
            if self.kind == "logical" and not self.raw:
                raise CircuitError("logical node needs raw outcome tags")
            if self.confirm and (self.kind != "decode" or len(self.confirm) % len(self.checks)):
                raise CircuitError("confirm checks must repeat the checks of a decode node")

    @property
    def width(self) -> int:
        """Number of input bits: checks, then confirm checks, then the raw bit."""
        return len(self.checks) + len(self.confirm) + (1 if self.kind == "logical" else 0)

    def input_parities(self) -> tuple[tuple[str, ...], ...]:
        """Tag sets whose parities are the input bits, in order."""
        return self.checks + self.confirm + ((self.raw,) if self.kind == "logical" else ())

    def input_tags(self) -> set[str]:
        return {t for parity in self.input_parities() for t in parity}

    def text(self) -> str:
        parts = [f"node {self.name} {self.kind}"]
        if self.kind != "verify":
            parts.append(f"pauli={self.pauli} after={self.apply_after}")
            parts.append("targets=" + ",".join(str(q) for q in self.targets))
        parts.append("checks=" + ";".join(",".join(c) for c in self.checks))
        if self.confirm:
            parts.append("confirm=" + ";".join(",".join(c) for c in self.confirm))
        if self.raw:
            parts.append("raw=" + ",".join(self.raw))
        if self.kind == "verify":
            parts.append("discard=" + ",".join(str(x) for x in self.discard))
        return " ".join(parts)


@dataclass(frozen=True)
class Block:
    name: str
    role: str  # "data" or "ancilla"
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    timesteps: tuple[tuple[Op, ...], ...]
    blocks: tuple[Block, ...]
    outputs: tuple[str, ...]
    nodes: tuple[ClassicalNode, ...] = ()
    inputs: tuple[str, ...] = ()

    @cached_property
    def locations(self) -> tuple[tuple[int, Op], ...]:
        return tuple((t, op) for t, ops in enumerate(self.timesteps) for op in ops)

    @cached_property
    def block_map(self) -> dict[str, Block]:
        return {b.name: b for b in self.blocks}

    @cached_property
    def measurement_times(self) -> dict[str, int]:
        return {op.tag: t for t, op in self.locations if op.tag is not None}

    @property
    def depth(self) -> int:
        return len(self.timesteps)

    def count(self, kind: str | None = None) -> int:
        return sum(1 for _, op in self.locations if kind is None or op.kind == kind)

    def node_ready_time(self, node: ClassicalNode) -> int:
        return max(self.measurement_times[t] for t in node.input_tags())

    def dump(self) -> str:
        lines = [f"circuit qubits={self.num_qubits}"]
        for b in self.blocks:
            lines.append(f"block {b.name} {b.role} " + " ".join(str(q) for q in b.qubits))
        if self.inputs:
            lines.append("input " + " ".join(self.inputs))
        lines.append("output " + " ".join(self.outputs))
        for t, ops in enumerate(self.timesteps):
            lines.append(f"t={t}: " + "; ".join(op.text() for op in ops))
        lines.extend(node.text() for node in self.nodes)
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()


def _sort_key(op: Op) -> tuple[int, ...]:
    return (min(op.qubits), *op.qubits)


def validate(circuit: Circuit) -> None:
    """Structural checks: one op per qubit per timestep, idle completeness,
    tags unique, classical nodes consistent with time ordering."""
    last: dict[int, tuple[int, Op]] = {}
    seen_tags: set[str] = set()
    for t, ops in enumerate(circuit.timesteps):
        busy: set[int] = set()
        for op in ops:
            for q in op.qubits:
                if q in busy:
                    raise CircuitError(f"qubit {q} used twice in timestep {t}")
                if not 0 <= q < circuit.num_qubits:
                    raise CircuitError(f"qubit {q} out of range")
                busy.add(q)
                prev = last.get(q)
                if prev is not None and prev[0] < t - 1:
                    if not (prev[1].kind in MEASUREMENTS and op.kind in PREPS):
                        raise CircuitError(f"qubit {q} alive but missing from timestep {prev[0] + 1}")
                if prev is not None and prev[1].kind in MEASUREMENTS and op.kind not in PREPS:
                    raise CircuitError(f"qubit {q} used after measurement without re-preparation")
                last[q] = (t, op)
            if op.tag is not None:
                if op.tag in seen_tags:
                    raise CircuitError(f"duplicate outcome tag {op.tag!r}")
                seen_tags.add(op.tag)
    names = set()
    nloc = len(circuit.locations)
    for node in circuit.nodes:
        if node.name in names:
            raise CircuitError(f"duplicate node {node.name!r}")
        names.add(node.name)
        missing = node.input_tags() - seen_tags
        if missing:
            raise CircuitError(f"node {node.name} reads unknown tags {sorted(missing)}")
        if node.kind != "verify" and not 0 <= node.apply_after < circuit.depth:
            raise CircuitError(f"node {node.name} applies outside the circuit")
        if any(not 0 <= x < nloc for x in node.discard):
            raise CircuitError(f"node {node.name} discards unknown locations")
    ready = [circuit.node_ready_time(node) for node in circuit.nodes]
    if ready != sorted(ready):
        raise CircuitError("classical nodes are not in time order")
    names_b = {b.name for b in circuit.blocks}
    for name in (*circuit.outputs, *circuit.inputs):
        if name not in names_b:
            raise CircuitError(f"unknown block {name!r}")


class CircuitBuilder:
    """Collects operations at absolute (possibly negative) timesteps.

    ``build`` shifts time so the circuit starts at 0, inserts idles for every
    alive qubit, and resolves verify-node discard groups from labels.
    """

    def __init__(self) -> None:
        self._ops: list[tuple[int, Op]] = []
        self._blocks: list[Block] = []
        self._num_qubits = 0
        self._nodes: list[tuple[ClassicalNode, str | None]] = []

    def block_name(self, qubits: Sequence[int]) -> str:
        """Name of the block made of exactly these qubits."""
        for b in self._blocks:
            if list(b.qubits) == list(qubits):
                return b.name
        raise CircuitError("no block with these qubits")

    def block(self, name: str, size: int, role: str = "ancilla") -> list[int]:
        if any(b.name == name for b in self._blocks):
            raise CircuitError(f"duplicate block {name!r}")
        qubits = list(range(self._num_qubits, self._num_qubits + size))
        self._num_qubits += size
        self._blocks.append(Block(name, role, tuple(qubits)))
        return qubits

    def add(self, t: int, kind: str, *qubits: int, tag: str | None = None, label: str = "") -> None:
        self._ops.append((t, Op(kind, tuple(qubits), tag, label)))

    def node(self, node: ClassicalNode, discard_label: str | None = None) -> None:
        self._nodes.append((node, discard_label))

    def build(self, outputs: Sequence[str], inputs: Sequence[str] = ()) -> Circuit:
        if not self._ops:
            raise CircuitError("empty circuit")
        t0 = min(t for t, _ in self._ops)
        per_qubit: dict[int, list[tuple[int, Op]]] = defaultdict(list)
        for t, op in self._ops:
            for q in op.qubits:
                per_qubit[q].append((t - t0, op))
        steps: dict[int, list[Op]] = defaultdict(list)
        for t, op in self._ops:
            steps[t - t0].append(op)
        for q, seq in per_qubit.items():
            seq.sort(key=lambda item: item[0])
            for (ta, a), (tb, b) in zip(seq, seq[1:]):
                if ta == tb:
                    raise CircuitError(f"qubit {q} used twice in timestep {ta}")
                if a.kind in MEASUREMENTS and b.kind in PREPS:
                    continue
                for t in range(ta + 1, tb):
                    steps[t].append(Op(IDLE, (q,), label=b.label))
        depth = max(steps) + 1
        timesteps = tuple(tuple(sorted(steps.get(t, ()), key=_sort_key)) for t in range(depth))
        locations = [(t, op) for t, ops in enumerate(timesteps) for op in ops]
        nodes = []
        for node, discard_label in self._nodes:
            changes: dict = {}
            if node.kind != "verify":
                changes["apply_after"] = node.apply_after - t0
            if discard_label is not None:
                changes["discard"] = tuple(
                    i for i, (_, op) in enumerate(locations) if _under(op.label, discard_label)
                )
            nodes.append(replace(node, **changes))
        tmp = Circuit(self._num_qubits, timesteps, tuple(self._blocks), tuple(outputs), (), tuple(inputs))
        times = tmp.measurement_times
        nodes.sort(key=lambda nd: max(times[t] for t in nd.input_tags()))
        circuit = Circuit(
            self._num_qubits, timesteps, tuple(self._blocks), tuple(outputs), tuple(nodes), tuple(inputs)
        )
        validate(circuit)
        return circuit


def _under(label: str, prefix: str) -> bool:
    return label == prefix or label.startswith(prefix + "/")


def parse_circuit(text: str) -> Circuit:
    """Inverse of :meth:`Circuit.dump` (labels are not preserved)."""
    num_qubits = None
    blocks: list[Block] = []
    outputs: tuple[str, ...] = ()
    inputs: tuple[str, ...] = ()
    timesteps: list[tuple[Op, ...]] = []
    nodes: list[ClassicalNode] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("circuit "):
                num_qubits = int(line.split("qubits=")[1])
            elif line.startswith("block "):
                _, name, role, *qs = line.split()
                blocks.append(Block(name, role, tuple(int(q) for q in qs)))
            elif line.startswith("output"):
                outputs = tuple(line.split()[1:])
            elif line.startswith("input"):
                inputs = tuple(line.split()[1:])
            elif line.startswith("t="):
                head, _, body = line.partition(":")
                if int(head[2:]) != len(timesteps):
                    raise CircuitError("timesteps out of order")
                timesteps.append(tuple(_parse_op(s) for s in body.split(";") if s.strip()))
            elif line.startswith("node "):
                nodes.append(_parse_node(line))
            else:
                raise CircuitError("unrecognised line")
        except (ValueError, IndexError) as exc:
            raise CircuitError(f"line {lineno}: {exc}: {raw!r}") from exc
    if num_qubits is None:
        raise CircuitError("missing 'circuit qubits=' header")
    circuit = Circuit(num_qubits, tuple(timesteps), tuple(blocks), outputs, tuple(nodes), inputs)
    validate(circuit)
    return circuit


def _parse_op(text: str) -> Op:
    tokens = text.split()
    kind, rest = tokens[0], tokens[1:]
    tag = None
    if rest and rest[-1].startswith(">"):
        tag = rest.pop()[1:]
    return Op(kind, tuple(int(tok.lstrip("q")) for tok in rest), tag)


def _parse_node(line: str) -> ClassicalNode:
    tokens = line.split()
    name, kind = tokens[1], tokens[2]
    fields: dict[str, str] = {}
    for tok in tokens[3:]:
        key, _, value = tok.partition("=")
        fields[key] = value

    def ints(key: str) -> tuple[int, ...]:
        value = fields.get(key, "")
        return tuple(int(v) for v in value.split(",")) if value else ()

    def groups(key: str) -> tuple[tuple[str, ...], ...]:
        value = fields.get(key, "")
        return tuple(tuple(c.split(",")) for c in value.split(";")) if value else ()

    raw = tuple(fields["raw"].split(",")) if fields.get("raw") else ()
    return ClassicalNode(
        name=name,
        kind=kind,
        checks=groups("checks"),
        pauli=fields.get("pauli", ""),
        targets=ints("targets"),
        raw=raw,
        apply_after=int(fields.get("after", -1)),
        discard=ints("discard"),
        confirm=groups("confirm"),
    )


def block_qubits(circuit: Circuit, names: Iterable[str]) -> list[int]:
    return [q for name in names for q in circuit.block_map[name].qubits]
