"""Pauli-frame propagation of fault assignments through a circuit.

Only the difference from the fault-free run is tracked: a Pauli frame on the
qubits and a flip bit per measurement outcome.  Individual gauge outcomes are
random even without faults, but every syndrome bit read by a classical node
is a deterministic parity (see :func:`backpropagate`), so flips are all that
decoding needs.

Faults act after their operation: a Pauli after a preparation, gate or idle
(a two-qubit Pauli after a CNOT), an outcome flip for a measurement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .circuit import (
    CNOT,
    HADAMARD,
    MEAS_X,
    MEAS_Z,
    MEASUREMENTS,
    PREP_PLUS,
    PREP_ZERO,
    Circuit,
    CircuitError,
    ClassicalNode,
    Op,
)
from .code import BaconShorCode, correct_and_classify, repetition_decode
from .pauli import PauliGroup, PauliOp

FLIP = "flip"
PAULIS_1Q = ("X", "Y", "Z")
PAULIS_2Q = tuple(a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II")


def fault_actions(op: Op) -> tuple[str, ...]:
    """Every nontrivial fault an operation can suffer."""
    if op.kind in MEASUREMENTS:
        return (FLIP,)
    if op.kind == CNOT:
        return PAULIS_2Q
    return PAULIS_1Q


class FaultSpecError(ValueError):
    pass


@dataclass(frozen=True)
class FaultAssignment:
    """Fault actions keyed by location id."""

    entries: Mapping[int, str] = field(default_factory=dict)

    @classmethod
    def parse(cls, spec: str) -> FaultAssignment:
        """Parse ``"loc:PAULI"`` pairs separated by commas or spaces, e.g.
        ``"12:X, 40:ZI, 7:flip"``."""
        entries: dict[int, str] = {}
        for token in re.split(r"[,\s]+", spec.strip()):
            if not token:
                continue
            loc, sep, action = token.partition(":")
            if not sep or not loc.isdigit():
                raise FaultSpecError(f"expected loc:PAULI, got {token!r}")
            if int(loc) in entries:
                raise FaultSpecError(f"location {loc} listed twice")
            entries[int(loc)] = action.upper() if action.lower() != FLIP else FLIP
        return cls(entries)

    def validate(self, circuit: Circuit) -> None:
        locations = circuit.locations
        for loc, action in self.entries.items():
            if not 0 <= loc < len(locations):
                raise FaultSpecError(f"no location {loc} (circuit has {len(locations)})")
            op = locations[loc][1]
            if action not in fault_actions(op):
                raise FaultSpecError(f"{action!r} is not a nontrivial fault for {op.kind} at location {loc}")

    def without(self, locations: Iterable[int]) -> FaultAssignment:
        drop = set(locations)
        return FaultAssignment({k: v for k, v in self.entries.items() if k not in drop})

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class FrameResult:
    residual: dict[str, PauliOp]
    outcome_flips: dict[str, int]
    applied_corrections: dict[str, PauliOp]
    discarded: tuple[int, ...] = ()
    cut_residual: dict[str, PauliOp] = field(default_factory=dict)

    def text(self) -> str:
        lines = [f"residual {name}: {p}" for name, p in self.residual.items()]
        flipped = sorted(tag for tag, f in self.outcome_flips.items() if f)
        lines.append("flipped outcomes: " + (" ".join(flipped) if flipped else "none"))
        for name, p in self.applied_corrections.items():
            if p.x or p.z:
                lines.append(f"correction {name}: {p}")
        if self.discarded:
            lines.append("discarded locations: " + " ".join(map(str, self.discarded)))
        return "\n".join(lines)


def _step(x: int, z: int, op: Op) -> tuple[int, int, int]:
    """Conjugate the frame through ``op``; returns (x, z, outcome flip)."""
    kind = op.kind
    if kind == CNOT:
        c, t = op.qubits
        if (x >> c) & 1:
            x ^= 1 << t
        if (z >> t) & 1:
            z ^= 1 << c
        return x, z, 0
    (q,) = op.qubits
    bit = 1 << q
    if kind == HADAMARD:
        bx, bz = x & bit, z & bit
        x = (x & ~bit) | (bit if bz else 0)
        z = (z & ~bit) | (bit if bx else 0)
        return x, z, 0
    if kind in (PREP_ZERO, PREP_PLUS):
        return x & ~bit, z & ~bit, 0
    if kind == MEAS_Z:
        return x & ~bit, z & ~bit, (x >> q) & 1
    if kind == MEAS_X:
        return x & ~bit, z & ~bit, (z >> q) & 1
    return x, z, 0


def _inject(x: int, z: int, op: Op, action: str) -> tuple[int, int]:
    for q, p in zip(op.qubits, action):
        if p in "XY":
            x ^= 1 << q
        if p in "ZY":
            z ^= 1 << q
    return x, z


def node_decision(node: ClassicalNode, bits: Sequence[int]) -> tuple[int, ...]:
    """Indices into ``node.targets`` that receive ``node.pauli``, given the
    node's input bits in :meth:`ClassicalNode.input_parities` order."""
    m = len(node.checks)
    checks = list(bits[:m])
    for start in range(m, m + len(node.confirm), m):
        if list(bits[start : start + m]) != checks:
            return ()
    flipped = repetition_decode(checks, m + 1)
    if node.kind == "decode":
        return tuple(flipped)
    if bits[-1] ^ (0 in flipped):
        return tuple(range(len(node.targets)))
    return ()


def node_correction(node: ClassicalNode, flips: Mapping[str, int], num_qubits: int) -> PauliOp:
    """The frame update a decode or logical node applies given outcome flips."""
    bits = [sum(flips.get(t, 0) for t in parity) & 1 for parity in node.input_parities()]
    qubits = [node.targets[i] for i in node_decision(node, bits)]
    return PauliOp.from_support(num_qubits, qubits, node.pauli)


def propagate(
    circuit: Circuit,
    assignment: FaultAssignment | Mapping[int, str],
    *,
    cut: int | None = None,
    cut_blocks: Sequence[str] = (),
) -> FrameResult:
    """Walk the circuit timestep by timestep with the faults switched on.

    With ``cut`` set, the frame on ``cut_blocks`` at the start of that
    timestep is also reported (including frame updates decided later but
    applied earlier).
    """
    if not isinstance(assignment, FaultAssignment):
        assignment = FaultAssignment(dict(assignment))
    assignment.validate(circuit)
    return _walk(circuit, assignment, (), cut, tuple(cut_blocks))


def _restrict(circuit: Circuit, x: int, z: int, names: Sequence[str]) -> dict[str, PauliOp]:
    out = {}
    for name in names:
        qubits = circuit.block_map[name].qubits
        rx = sum(((x >> q) & 1) << i for i, q in enumerate(qubits))
        rz = sum(((z >> q) & 1) << i for i, q in enumerate(qubits))
        out[name] = PauliOp(len(qubits), rx, rz)
    return out


def _walk(
    circuit: Circuit,
    assignment: FaultAssignment,
    discarded: tuple[int, ...],
    cut: int | None,
    cut_blocks: tuple[str, ...],
) -> FrameResult:
    faults = assignment.entries
    ready: dict[int, list[ClassicalNode]] = {}
    for node in circuit.nodes:
        ready.setdefault(circuit.node_ready_time(node), []).append(node)
    x = z = 0
    snap_x = snap_z = 0
    flips: dict[str, int] = {}
    consumed: set[str] = set()
    corrections: dict[str, PauliOp] = {}
    pending: dict[int, list[PauliOp]] = {}
    loc = 0
    for t, ops in enumerate(circuit.timesteps):
        if t == cut:
            snap_x, snap_z = x, z
        for op in ops:
            x, z, flip = _step(x, z, op)
            action = faults.get(loc)
            if op.tag is not None:
                flips[op.tag] = flip ^ (1 if action == FLIP else 0)
            elif action is not None:
                x, z = _inject(x, z, op, action)
            loc += 1
        for corr in pending.pop(t, ()):
            x ^= corr.x
            z ^= corr.z
        for node in ready.get(t, ()):
            consumed |= node.input_tags()
            if node.kind == "verify":
                if sum(flips[tag] for tag in node.checks[0]) & 1:
                    hit = [i for i in node.discard if i in faults]
                    if not hit:
                        raise CircuitError(f"verification {node.name} fired without a fault in its group")
                    return _walk(
                        circuit, assignment.without(node.discard), discarded + tuple(hit), cut, cut_blocks
                    )
                continue
            corr = node_correction(node, flips, circuit.num_qubits)
            corrections[node.name] = corr
            if node.apply_after > t:
                pending.setdefault(node.apply_after, []).append(corr)
                continue
            cx, cz = corr.x, corr.z
            for s in range(node.apply_after + 1, t + 1):
                if s == cut:
                    snap_x ^= cx
                    snap_z ^= cz
                for op in circuit.timesteps[s]:
                    cx, cz, flip = _step(cx, cz, op)
                    if flip:
                        if op.tag in consumed:
                            raise CircuitError(f"correction of {node.name} feeds back into {op.tag}")
                        flips[op.tag] ^= 1
            x ^= cx
            z ^= cz
    residual = _restrict(circuit, x, z, circuit.outputs)
    at_cut = _restrict(circuit, snap_x, snap_z, cut_blocks) if cut is not None else {}
    return FrameResult(residual, flips, corrections, tuple(sorted(discarded)), at_cut)


_LOGICAL_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


def cnot_logical(control: tuple[int, int], target: tuple[int, int]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Conjugate a logical (x, z) pair on control and target through CNOT."""
    (cx, cz), (tx, tz) = control, target
    return (cx, cz ^ tz), (tx ^ cx, tz)


def exrec_outcome(exrec, assignment: FaultAssignment | Mapping[int, str]) -> tuple[tuple, tuple]:
    """Logical (x, z) bits per block at the gate input and at the output."""
    result = propagate(exrec.circuit, assignment, cut=exrec.gate_time, cut_blocks=exrec.gate_blocks)
    before = tuple(_LOGICAL_BITS[correct_and_classify(exrec.code, result.cut_residual[b])] for b in exrec.gate_blocks)
    after = tuple(_LOGICAL_BITS[correct_and_classify(exrec.code, r)] for r in result.residual.values())
    return before, after


def exrec_correct(exrec, assignment: FaultAssignment | Mapping[int, str]) -> bool:
    """True iff ideally decoding the outputs gives the ideal CNOT applied to the
    ideally decoded blocks handed over by the leading ECs.

    A logical flip left behind by a leading EC is therefore not a failure of
    this exRec; only what happens from the gate onward is judged.
    """
    before, after = exrec_outcome(exrec, assignment)
    return cnot_logical(*before) == after


class NonDeterministicError(CircuitError):
    """A parity of measurement outcomes is random in the fault-free circuit."""


def backpropagate(circuit: Circuit, pauli: PauliOp | None = None, tags: Iterable[str] = ()) -> PauliOp:
    """Heisenberg-propagate an end-of-circuit Pauli times a set of outcome
    parities back to the circuit input.

    Raises :class:`NonDeterministicError` if the observable does not commute
    with a preparation it meets.  The result acts on the input blocks only
    (as a Pauli on all circuit qubits).
    """
    tags = set(tags)
    x = pauli.x if pauli is not None else 0
    z = pauli.z if pauli is not None else 0
    for t in range(circuit.depth - 1, -1, -1):
        for op in circuit.timesteps[t]:
            if op.kind in (CNOT, HADAMARD):
                x, z, _ = _step(x, z, op)
                continue
            (q,) = op.qubits
            bit = 1 << q
            if op.kind in MEASUREMENTS:
                if (x | z) & bit:
                    raise NonDeterministicError(f"observable reaches {q} after its measurement {op.tag}")
                if op.tag in tags:
                    if op.kind == MEAS_Z:
                        z |= bit
                    else:
                        x |= bit
            elif op.kind == PREP_ZERO:
                if x & bit:
                    raise NonDeterministicError(f"anticommutes with |0> preparation of qubit {q} at t={t}")
                z &= ~bit
            elif op.kind == PREP_PLUS:
                if z & bit:
                    raise NonDeterministicError(f"anticommutes with |+> preparation of qubit {q} at t={t}")
                x &= ~bit
    return PauliOp(circuit.num_qubits, x, z)


def input_stabilizer_group(circuit: Circuit, code: BaconShorCode, extra: Iterable[PauliOp] = ()) -> PauliGroup:
    """Stabilizers of the code on every input block, as operators on the whole circuit."""
    gens = list(extra)
    for name in circuit.inputs:
        qubits = circuit.block_map[name].qubits
        for g in code.stabilizer_gens:
            gens.append(lift(g, qubits, circuit.num_qubits))
    return PauliGroup(gens, circuit.num_qubits)


def lift(p: PauliOp, qubits, num_qubits: int) -> PauliOp:
    """Embed a block-local operator onto circuit qubits."""
    x = sum(((p.x >> i) & 1) << q for i, q in enumerate(qubits))
    z = sum(((p.z >> i) & 1) << q for i, q in enumerate(qubits))
    return PauliOp(num_qubits, x, z)


def check_deterministic(circuit: Circuit, code: BaconShorCode) -> None:
    """Every syndrome bit and verification flag read by a classical node is a
    fixed parity in the fault-free circuit, for any input code state."""
    group = input_stabilizer_group(circuit, code)
    for node in circuit.nodes:
        for i, check in enumerate(node.checks + node.confirm):
            p = backpropagate(circuit, None, check)
            if p not in group:
                raise NonDeterministicError(f"check {i} of node {node.name} depends on the input state")
