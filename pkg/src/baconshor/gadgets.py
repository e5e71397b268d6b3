"""Fault-tolerant gadgets for the Bacon-Shor code, built as explicit circuits.

Every ``emit_*`` function writes operations into a :class:`CircuitBuilder`
at absolute timesteps; the ``build_*`` functions wrap one gadget into a
standalone :class:`Circuit`.

Logical ancillas are products of cat states: ``|0>_L`` is one X-basis cat
per column (stabilizers ``X_{r,c} X_{r+1,c}`` and the column ``Z`` string),
``|+>_L`` is its Hadamard dual laid along rows.  The X-basis cat is prepared
directly as ``|0>|+>...|+>`` followed by a CNOT ladder pointing upwards; this
is the "prepare a Z-basis cat, then Hadamard every qubit" circuit with the
Hadamards pushed through the ladder, so it has no Hadamard locations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .circuit import (
    CNOT,
    IDLE,
    MEAS_X,
    MEAS_Z,
    PREP_PLUS,
    PREP_ZERO,
    Circuit,
    CircuitBuilder,
    ClassicalNode,
    Op,
)
from .code import BaconShorCode, GaugeId

EC_METHODS = ("gauge", "steane", "knill")
ANCILLA_POLICIES = ("per_check", "single_roaming")

# cats of at least this many qubits get an end-to-end parity check
DEFAULT_VERIFY_MIN = 4


def _put(b: CircuitBuilder, t: int, op: Op, dual: bool) -> None:
    op = op.dual() if dual else op
    b.add(t, op.kind, *op.qubits, tag=op.tag, label=op.label)


def cat_depth(size: int, verify: bool) -> int:
    return size + 2 if verify else size


def emit_cat(
    b: CircuitBuilder,
    qubits: Sequence[int],
    t_end: int,
    label: str,
    *,
    dual: bool = False,
    verify: bool = False,
) -> None:
    """X-basis cat on ``qubits`` (or, with ``dual``, the Z-basis cat), finishing
    at ``t_end``.

    With ``verify`` an extra ancilla measures ``X`` on the two end qubits
    (``Z`` for the dual); a nonzero flag discards everything labelled
    ``label``.
    """
    m = len(qubits)
    if m < 2:
        raise ValueError("a cat state needs at least two qubits")
    if verify and m < 3:
        raise ValueError("verification needs a cat of at least three qubits")
    t0 = t_end - cat_depth(m, verify) + 1
    q = list(qubits)
    _put(b, t0, Op(PREP_ZERO, (q[0],), label=label), dual)
    _put(b, t0, Op(PREP_PLUS, (q[1],), label=label), dual)
    for i in range(1, m):
        _put(b, t0 + i, Op(CNOT, (q[i], q[i - 1]), label=label), dual)
        if i + 1 < m:
            _put(b, t0 + i, Op(PREP_PLUS, (q[i + 1],), label=label), dual)
    if not verify:
        return
    (a,) = b.block(f"{label}/v", 1)
    tag = f"{label}/v"
    _put(b, t0 + m - 2, Op(PREP_PLUS, (a,), label=label), dual)
    _put(b, t0 + m - 1, Op(CNOT, (a, q[0]), label=label), dual)
    _put(b, t0 + m, Op(CNOT, (a, q[-1]), label=label), dual)
    _put(b, t0 + m + 1, Op(MEAS_X, (a,), tag=tag, label=label), dual)
    for x in q[:-1]:
        b.add(t0 + m, IDLE, x, label=label)
    for x in q:
        b.add(t0 + m + 1, IDLE, x, label=label)
    b.node(ClassicalNode(name=tag, kind="verify", checks=((tag,),)), discard_label=label)


def prep_depth(code: BaconShorCode, verify_min: int = DEFAULT_VERIFY_MIN) -> int:
    return cat_depth(code.n, code.n >= verify_min)


def emit_prep_L(
    b: CircuitBuilder,
    code: BaconShorCode,
    block: Sequence[int],
    t_end: int,
    label: str,
    *,
    plus: bool,
    verify_min: int = DEFAULT_VERIFY_MIN,
) -> None:
    """``|0>_L`` (column cats) or, with ``plus``, ``|+>_L`` (row cats).

    The ``|+>_L`` layout is the ``|0>_L`` one conjugated by bitwise Hadamard
    and rotated by 90 degrees: the rotation swaps rows with columns, the
    Hadamard swaps every cat for its dual.
    """
    n = code.n
    for j in range(n):
        line = code.row(j) if plus else code.column(j)
        emit_cat(
            b,
            [block[q] for q in line],
            t_end,
            f"{label}/cat{j}",
            dual=plus,
            verify=n >= verify_min,
        )


def _gauge_order(code: BaconShorCode, order: str) -> list[GaugeId]:
    xs = [gid for gid in code.gauge_ids if gid[0] == "X"]  # column-major
    zs = [gid for gid in code.gauge_ids if gid[0] == "Z"]  # row-major
    if order == "xz":
        return xs + zs
    if order == "zx":
        return zs + xs
    raise ValueError(f"unknown gauge measurement order {order!r}")


def emit_gauge_check(
    b: CircuitBuilder,
    code: BaconShorCode,
    data: Sequence[int],
    gid: GaugeId,
    ancilla: int,
    t_prep: int,
    label: str,
    tag: str,
) -> None:
    """One weight-2 gauge measurement: ancilla in |+> with two CNOTs onto the
    data for XX, ancilla in |0> as CNOT target for ZZ.  Upper (left) qubit first."""
    first, second = (data[q] for q in code.gauge_qubits(gid))
    if gid[0] == "X":
        b.add(t_prep, PREP_PLUS, ancilla, label=label)
        b.add(t_prep + 1, CNOT, ancilla, first, label=label)
        b.add(t_prep + 2, CNOT, ancilla, second, label=label)
        b.add(t_prep + 3, MEAS_X, ancilla, tag=tag, label=label)
    else:
        b.add(t_prep, PREP_ZERO, ancilla, label=label)
        b.add(t_prep + 1, CNOT, first, ancilla, label=label)
        b.add(t_prep + 2, CNOT, second, ancilla, label=label)
        b.add(t_prep + 3, MEAS_Z, ancilla, tag=tag, label=label)


def _gauge_tag(label: str, gid: GaugeId) -> str:
    return f"{label}/{gid[0]}{gid[1]}.{gid[2]}"


def _decode_nodes(
    code: BaconShorCode,
    data: Sequence[int],
    label: str,
    x_checks: Sequence[Sequence[str]],
    z_checks: Sequence[Sequence[str]],
    apply_after: int,
    x_confirm: Sequence[Sequence[str]] = (),
    z_confirm: Sequence[Sequence[str]] = (),
) -> list[ClassicalNode]:
    """Row decoder (Z corrections on column 0) and column decoder (X
    corrections on row 0) for one block."""
    n = code.n
    return [
        ClassicalNode(
            name=f"{label}/zfix",
            kind="decode",
            checks=tuple(tuple(c) for c in x_checks),
            pauli="Z",
            targets=tuple(data[code.qubit(r, 0)] for r in range(n)),
            apply_after=apply_after,
            confirm=tuple(tuple(c) for c in x_confirm),
        ),
        ClassicalNode(
            name=f"{label}/xfix",
            kind="decode",
            checks=tuple(tuple(c) for c in z_checks),
            pauli="X",
            targets=tuple(data[code.qubit(0, c)] for c in range(n)),
            apply_after=apply_after,
            confirm=tuple(tuple(c) for c in z_confirm),
        ),
    ]


def emit_gauge_ec(
    b: CircuitBuilder,
    code: BaconShorCode,
    data: Sequence[int],
    t_in: int,
    label: str,
    *,
    policy: str = "per_check",
    order: str = "xz",
    rounds: int | None = None,
) -> tuple[list[int], int]:
    """Measure every gauge generator ``rounds`` times and decode the
    stabilizer parities of the last round, but only if all rounds agree.

    A single round is not fault tolerant: a data fault between the two gauge
    measurements touching one qubit flips only one of the two stabilizer
    bits it should.  With ``t + 1`` rounds (the default, ``t = (n - 1) // 2``)
    any ``t`` faults leave some round untouched, so agreement means every
    round reports the syndrome of the data at that clean round.

    Returns the output block and the first timestep it is free.
    """
    n = code.n
    if rounds is None:
        rounds = (n - 1) // 2 + 1
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    checks = _gauge_order(code, order)
    per_round = len(checks)
    half = per_round // 2
    if policy == "per_check":
        ancillas = b.block(f"{label}.anc", per_round) * rounds
        t_preps = [t_in - 1 + 4 * r + (0 if i < half else 2) for r in range(rounds) for i in range(per_round)]
    elif policy == "single_roaming":
        ancillas = b.block(f"{label}.anc", 1) * (per_round * rounds)
        t_preps = [t_in - 1 + 4 * i for i in range(per_round * rounds)]
    else:
        raise ValueError(f"unknown ancilla policy {policy!r}")
    tags: list[dict[GaugeId, str]] = [{} for _ in range(rounds)]
    for i, (a, tp) in enumerate(zip(ancillas, t_preps)):
        r, j = divmod(i, per_round)
        gid = checks[j]
        tag = _gauge_tag(label if rounds == 1 else f"{label}/{r}", gid)
        tags[r][gid] = tag
        emit_gauge_check(b, code, data, gid, a, tp, label, tag)
    last = max(t_preps) + 2

    def syndrome(round_tags: dict[GaugeId, str]) -> tuple[list, list]:
        xs = [[round_tags[("X", j, k)] for k in range(n)] for j in range(n - 1)]
        zs = [[round_tags[("Z", k, j)] for k in range(n)] for j in range(n - 1)]
        return xs, zs

    x_checks, z_checks = syndrome(tags[-1])
    x_confirm: list = []
    z_confirm: list = []
    for round_tags in tags[:-1]:
        xs, zs = syndrome(round_tags)
        x_confirm += xs
        z_confirm += zs
    for node in _decode_nodes(code, data, label, x_checks, z_checks, last, x_confirm, z_confirm):
        b.node(node)
    return list(data), last + 1


def emit_steane_ec(
    b: CircuitBuilder,
    code: BaconShorCode,
    data: Sequence[int],
    t_in: int,
    label: str,
    *,
    verify_min: int = DEFAULT_VERIFY_MIN,
) -> tuple[list[int], int]:
    """X errors are copied onto a ``|+>_L`` block read out bitwise in Z, then Z
    errors onto a ``|0>_L`` block read out bitwise in X.  Each ancilla is
    invariant under the logical operator it would otherwise pick up."""
    n = code.n
    N = code.num_qubits
    plus = b.block(f"{label}.a0", N)
    zero = b.block(f"{label}.a1", N)
    emit_prep_L(b, code, plus, t_in - 1, f"{label}/a0", plus=True, verify_min=verify_min)
    emit_prep_L(b, code, zero, t_in, f"{label}/a1", plus=False, verify_min=verify_min)
    zt = [f"{label}/a0.{q}" for q in range(N)]
    pt = [f"{label}/a1.{q}" for q in range(N)]
    for q in range(N):
        b.add(t_in, CNOT, data[q], plus[q], label=label)
        b.add(t_in + 1, MEAS_Z, plus[q], tag=zt[q], label=label)
        b.add(t_in + 1, CNOT, zero[q], data[q], label=label)
        b.add(t_in + 2, MEAS_X, zero[q], tag=pt[q], label=label)
    # X-type stabilizers (row pairs) come from the X readout
    x_checks = [[pt[q] for q in code.row(j) + code.row(j + 1)] for j in range(n - 1)]
    z_checks = [[zt[q] for q in code.column(j) + code.column(j + 1)] for j in range(n - 1)]
    for node in _decode_nodes(code, data, label, x_checks, z_checks, t_in + 1):
        b.node(node)
    return list(data), t_in + 2


def emit_knill_ec(
    b: CircuitBuilder,
    code: BaconShorCode,
    data: Sequence[int],
    t_in: int,
    label: str,
    *,
    verify_min: int = DEFAULT_VERIFY_MIN,
) -> tuple[list[int], int]:
    """Teleport the block through a logical Bell pair.

    The pair is ``|+>_L`` (control) and ``|0>_L`` (target) joined by a
    transversal CNOT.  The incoming block is CNOTed onto the ``|+>_L`` half,
    then read out bitwise in X while that half is read out in Z; the
    ``|0>_L`` half leaves as the output with a logical Pauli-frame update.
    """
    n = code.n
    N = code.num_qubits
    plus = b.block(f"{label}.bp", N)
    out = b.block(f"{label}.out", N, role="data")
    emit_prep_L(b, code, plus, t_in - 2, f"{label}/bp", plus=True, verify_min=verify_min)
    emit_prep_L(b, code, out, t_in - 2, f"{label}/bz", plus=False, verify_min=verify_min)
    dt = [f"{label}/d.{q}" for q in range(N)]
    pt = [f"{label}/bp.{q}" for q in range(N)]
    for q in range(N):
        b.add(t_in - 1, CNOT, plus[q], out[q], label=f"{label}/bell")
        b.add(t_in, CNOT, data[q], plus[q], label=label)
        b.add(t_in + 1, MEAS_X, data[q], tag=dt[q], label=label)
        b.add(t_in + 1, MEAS_Z, plus[q], tag=pt[q], label=label)
    b.node(
        ClassicalNode(
            name=f"{label}/zframe",
            kind="logical",
            checks=tuple(tuple(dt[q] for q in code.row(j) + code.row(j + 1)) for j in range(n - 1)),
            raw=tuple(dt[q] for q in code.row(0)),
            pauli="Z",
            targets=tuple(out[q] for q in code.column(0)),
            apply_after=t_in - 1,
        )
    )
    b.node(
        ClassicalNode(
            name=f"{label}/xframe",
            kind="logical",
            checks=tuple(
                tuple(pt[q] for q in code.column(j) + code.column(j + 1)) for j in range(n - 1)
            ),
            raw=tuple(pt[q] for q in code.column(0)),
            pauli="X",
            targets=tuple(out[q] for q in code.row(0)),
            apply_after=t_in - 1,
        )
    )
    return out, t_in


def emit_ec(
    b: CircuitBuilder,
    code: BaconShorCode,
    data: Sequence[int],
    t_in: int,
    label: str,
    method: str,
    **options,
) -> tuple[list[int], int]:
    if method == "gauge":
        return emit_gauge_ec(b, code, data, t_in, label, **options)
    if method == "steane":
        return emit_steane_ec(b, code, data, t_in, label, **options)
    if method == "knill":
        return emit_knill_ec(b, code, data, t_in, label, **options)
    raise ValueError(f"unknown EC method {method!r}; expected one of {EC_METHODS}")


# standalone gadgets


def build_gauge_meas(code: BaconShorCode, gid: GaugeId) -> Circuit:
    """The two-qubit gauge measurement on a fresh ancilla (qubit ``n*n``)."""
    if gid not in code.gauge_ids:
        raise ValueError(f"{gid!r} is not a weight-2 gauge generator of the n={code.n} code")
    b = CircuitBuilder()
    data = b.block("data", code.num_qubits, role="data")
    (a,) = b.block("anc", 1)
    emit_gauge_check(b, code, data, gid, a, 0, "meas", _gauge_tag("meas", gid))
    return b.build(outputs=["data"], inputs=["data"])


def build_gauge_ec(
    code: BaconShorCode, ancilla_policy: str = "per_check", order: str = "xz", rounds: int | None = None
) -> Circuit:
    b = CircuitBuilder()
    data = b.block("data", code.num_qubits, role="data")
    emit_gauge_ec(b, code, data, 0, "ec", policy=ancilla_policy, order=order, rounds=rounds)
    return b.build(outputs=["data"], inputs=["data"])


def build_prep_zero_L(code: BaconShorCode, verify_min: int = DEFAULT_VERIFY_MIN) -> Circuit:
    b = CircuitBuilder()
    out = b.block("out", code.num_qubits, role="data")
    emit_prep_L(b, code, out, 0, "prep0", plus=False, verify_min=verify_min)
    return b.build(outputs=["out"])


def build_prep_plus_L(code: BaconShorCode, verify_min: int = DEFAULT_VERIFY_MIN) -> Circuit:
    b = CircuitBuilder()
    out = b.block("out", code.num_qubits, role="data")
    emit_prep_L(b, code, out, 0, "prep+", plus=True, verify_min=verify_min)
    return b.build(outputs=["out"])


def build_bell_prep_L(code: BaconShorCode, verify_min: int = DEFAULT_VERIFY_MIN) -> Circuit:
    """``|+>_L |0>_L`` followed by a transversal CNOT: the logical Bell pair."""
    b = CircuitBuilder()
    plus = b.block("plus", code.num_qubits, role="data")
    zero = b.block("zero", code.num_qubits, role="data")
    emit_prep_L(b, code, plus, 0, "plus", plus=True, verify_min=verify_min)
    emit_prep_L(b, code, zero, 0, "zero", plus=False, verify_min=verify_min)
    for q in range(code.num_qubits):
        b.add(1, CNOT, plus[q], zero[q], label="bell")
    return b.build(outputs=["plus", "zero"])


def build_steane_ec(code: BaconShorCode, verify_min: int = DEFAULT_VERIFY_MIN) -> Circuit:
    b = CircuitBuilder()
    data = b.block("data", code.num_qubits, role="data")
    emit_steane_ec(b, code, data, 0, "ec", verify_min=verify_min)
    return b.build(outputs=["data"], inputs=["data"])


def build_knill_ec(code: BaconShorCode, verify_min: int = DEFAULT_VERIFY_MIN) -> Circuit:
    b = CircuitBuilder()
    data = b.block("data", code.num_qubits, role="data")
    emit_knill_ec(b, code, data, 0, "ec", verify_min=verify_min)
    return b.build(outputs=["ec.out"], inputs=["data"])


def build_ec(code: BaconShorCode, method: str, **options) -> Circuit:
    b = CircuitBuilder()
    data = b.block("data", code.num_qubits, role="data")
    out, _ = emit_ec(b, code, data, 0, "ec", method, **options)
    out_name = "ec.out" if method == "knill" else "data"
    return b.build(outputs=[out_name], inputs=["data"])


# extended rectangles

SECTIONS = ("lead0", "lead1", "gate", "trail0", "trail1")


@dataclass(frozen=True)
class ExRec:
    """A transversal-CNOT gadget with an EC on each input and each output."""

    code: BaconShorCode
    ec_method: str
    circuit: Circuit
    gate_blocks: tuple[str, str]
    gate_kind: str = "cnot"

    @cached_property
    def gate_time(self) -> int:
        """Timestep of the transversal gate; the frame at its start is what the
        leading ECs hand over."""
        locs = self.circuit.locations
        return min(locs[i][0] for i in self.gate_section if locs[i][1].kind == CNOT)

    @cached_property
    def sections(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {s: [] for s in SECTIONS}
        for i, (_, op) in enumerate(self.circuit.locations):
            out[op.label.split("/")[0]].append(i)
        return {s: tuple(v) for s, v in out.items()}

    @property
    def locations(self):
        return self.circuit.locations

    @property
    def leading_ecs(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.sections["lead0"], self.sections["lead1"]

    @property
    def gate_section(self) -> tuple[int, ...]:
        return self.sections["gate"]

    @property
    def trailing_ecs(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.sections["trail0"], self.sections["trail1"]

    @property
    def descriptor(self) -> dict:
        return {
            "n": self.code.n,
            "ec": self.ec_method,
            "gate": self.gate_kind,
            "locations": len(self.locations),
            "circuit_hash": self.circuit.hash(),
        }


def build_exrec(code: BaconShorCode, ec_method: str, **options) -> ExRec:
    """Leading EC on both blocks, transversal CNOT (block 0 controls block 1),
    trailing EC on both blocks."""
    if ec_method not in EC_METHODS:
        raise ValueError(f"unknown EC method {ec_method!r}; expected one of {EC_METHODS}")
    N = code.num_qubits
    b = CircuitBuilder()
    blocks = [b.block("in0", N, role="data"), b.block("in1", N, role="data")]
    outs = []
    t_free = []
    for i, data in enumerate(blocks):
        out, tf = emit_ec(b, code, data, 0, f"lead{i}", ec_method, **options)
        outs.append(out)
        t_free.append(tf)
    g = max(t_free)
    for q in range(N):
        b.add(g, CNOT, outs[0][q], outs[1][q], label="gate")
    finals = []
    for i, data in enumerate(outs):
        out, _ = emit_ec(b, code, data, g + 1, f"trail{i}", ec_method, **options)
        finals.append(out)
    circuit = b.build(outputs=[b.block_name(out) for out in finals], inputs=["in0", "in1"])
    return ExRec(code, ec_method, circuit, (b.block_name(outs[0]), b.block_name(outs[1])))


def count_locations(exrec: ExRec) -> int:
    return len(exrec.locations)
