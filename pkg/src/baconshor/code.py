"""The Bacon-Shor code family on an n x n lattice.

Qubits sit on lattice vertices ``(row, col)`` with ``0 <= row, col < n`` and
flat index ``row * n + col``.  X-type stabilizers pair adjacent rows, Z-type
stabilizers pair adjacent columns; the gauge group is generated by vertical
XX pairs and horizontal ZZ pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Sequence

from .pauli import DimensionError, PauliGroup, PauliOp, commutes, multiply


class ResourceGuardError(RuntimeError):
    """Raised instead of starting a computation that would take too long."""


class PreconditionError(ValueError):
    pass


# ("X", j): X on rows j and j+1;  ("Z", j): Z on columns j and j+1
StabilizerId = tuple[str, int]
# ("X", r, c): X_{r,c} X_{r+1,c};  ("Z", r, c): Z_{r,c} Z_{r,c+1}
GaugeId = tuple[str, int, int]


@dataclass(frozen=True)
class Syndrome:
    """Flips of the X-type (row pair) and Z-type (column pair) stabilizers."""

    x_checks: tuple[int, ...]
    z_checks: tuple[int, ...]

    def is_trivial(self) -> bool:
        return not any(self.x_checks) and not any(self.z_checks)


def repetition_decode(checks: Sequence[int], n: int) -> list[int]:
    """Minimal set of flipped positions explaining a length-n repetition syndrome.

    ``checks[i]`` is the parity of positions ``i`` and ``i + 1``.  On a tie the
    set containing position 0 wins.
    """
    if len(checks) != n - 1:
        raise DimensionError(f"expected {n - 1} check bits, got {len(checks)}")
    bits = [0] * n
    for i, s in enumerate(checks):
        bits[i + 1] = bits[i] ^ (s & 1)
    w = sum(bits)
    if 2 * w < n:
        return [i for i in range(n) if bits[i]]
    return [i for i in range(n) if not bits[i]]


def parity_vector_fails(bits: Sequence[int]) -> bool:
    """Whether repetition decoding of per-row (or per-column) parities leaves a
    logical flip, i.e. the decoder picks the complement of the true pattern."""
    n = len(bits)
    checks = [bits[i] ^ bits[i + 1] for i in range(n - 1)]
    flipped = repetition_decode(checks, n)
    return bool(bits[0] ^ (0 in flipped))


@dataclass(frozen=True)
class BaconShorCode:
    n: int
    stabilizer_ids: tuple[StabilizerId, ...] = field(init=False)
    gauge_ids: tuple[GaugeId, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"Bacon-Shor code needs n >= 2, got {self.n}")
        n = self.n
        stab = [("X", j) for j in range(n - 1)] + [("Z", j) for j in range(n - 1)]
        gauge = [("X", r, c) for c in range(n) for r in range(n - 1)]
        gauge += [("Z", r, c) for r in range(n) for c in range(n - 1)]
        object.__setattr__(self, "stabilizer_ids", tuple(stab))
        object.__setattr__(self, "gauge_ids", tuple(gauge))

    @property
    def num_qubits(self) -> int:
        return self.n * self.n

    @property
    def parameters(self) -> tuple[int, int, int]:
        return (self.n * self.n, 1, self.n)

    def qubit(self, row: int, col: int) -> int:
        if not (0 <= row < self.n and 0 <= col < self.n):
            raise IndexError(f"({row}, {col}) outside the {self.n}x{self.n} lattice")
        return row * self.n + col

    def coords(self, index: int) -> tuple[int, int]:
        return divmod(index, self.n)

    def row(self, r: int) -> list[int]:
        return [self.qubit(r, c) for c in range(self.n)]

    def column(self, c: int) -> list[int]:
        return [self.qubit(r, c) for r in range(self.n)]

    def _op(self, qubits: Sequence[int], pauli: str) -> PauliOp:
        return PauliOp.from_support(self.num_qubits, qubits, pauli)

    def stabilizer(self, sid: StabilizerId) -> PauliOp:
        kind, j = sid
        if sid not in self.stabilizer_ids:
            raise KeyError(f"no stabilizer generator {sid!r}")
        if kind == "X":
            return self._op(self.row(j) + self.row(j + 1), "X")
        return self._op(self.column(j) + self.column(j + 1), "Z")

    def gauge_qubits(self, gid: GaugeId) -> tuple[int, int]:
        """The two qubits of a gauge generator, upper/left one first."""
        if gid not in self.gauge_ids:
            raise KeyError(f"no gauge generator {gid!r}")
        kind, r, c = gid
        if kind == "X":
            return self.qubit(r, c), self.qubit(r + 1, c)
        return self.qubit(r, c), self.qubit(r, c + 1)

    def gauge(self, gid: GaugeId) -> PauliOp:
        return self._op(self.gauge_qubits(gid), gid[0])

    @cached_property
    def stabilizer_gens(self) -> tuple[PauliOp, ...]:
        return tuple(self.stabilizer(s) for s in self.stabilizer_ids)

    @cached_property
    def gauge_gens(self) -> tuple[PauliOp, ...]:
        return tuple(self.gauge(g) for g in self.gauge_ids)

    @cached_property
    def logical_x(self) -> PauliOp:
        return self._op(self.row(0), "X")

    @cached_property
    def logical_z(self) -> PauliOp:
        return self._op(self.column(0), "Z")

    @cached_property
    def _gauge_group(self) -> PauliGroup:
        return PauliGroup(list(self.stabilizer_gens) + list(self.gauge_gens))


def build_code(n: int) -> BaconShorCode:
    return BaconShorCode(n)


def gauge_factorization(code: BaconShorCode, sid: StabilizerId) -> list[PauliOp]:
    """The n weight-2 gauge operators whose product is stabilizer ``sid``."""
    if sid not in code.stabilizer_ids:
        raise KeyError(f"no stabilizer generator {sid!r}")
    kind, j = sid
    if kind == "X":
        return [code.gauge(("X", j, k)) for k in range(code.n)]
    return [code.gauge(("Z", k, j)) for k in range(code.n)]


def syndrome_of(code: BaconShorCode, error: PauliOp) -> Syndrome:
    if error.num_qubits != code.num_qubits:
        raise DimensionError(f"error acts on {error.num_qubits} qubits, code has {code.num_qubits}")
    bits = [0 if commutes(error, g) else 1 for g in code.stabilizer_gens]
    m = code.n - 1
    return Syndrome(tuple(bits[:m]), tuple(bits[m:]))


def decode(code: BaconShorCode, syndrome: Syndrome) -> PauliOp:
    """Row/column repetition decoding.

    Each flipped row gets Z on its column-0 qubit and each flipped column gets
    X on its row-0 qubit; these differ from full row/column operators only by
    gauge elements.
    """
    n = code.n
    if len(syndrome.x_checks) != n - 1 or len(syndrome.z_checks) != n - 1:
        raise DimensionError("syndrome length does not match code")
    rows = repetition_decode(syndrome.x_checks, n)
    cols = repetition_decode(syndrome.z_checks, n)
    paulis: dict[int, str] = {}
    for r in rows:
        paulis[code.qubit(r, 0)] = "Z"
    for c in cols:
        q = code.qubit(0, c)
        paulis[q] = "Y" if paulis.get(q) == "Z" else "X"
    return PauliOp.from_map(code.num_qubits, paulis)


def logical_effect(code: BaconShorCode, residual: PauliOp) -> str:
    """Classify a trivial-syndrome operator as I, X, Z or Y on the protected qubit."""
    if not syndrome_of(code, residual).is_trivial():
        raise PreconditionError("logical_effect needs an operator with trivial syndrome")
    group = code._gauge_group
    if residual in group:
        return "I"
    if multiply(residual, code.logical_x) in group:
        return "X"
    if multiply(residual, code.logical_z) in group:
        return "Z"
    return "Y"


def correct_and_classify(code: BaconShorCode, error: PauliOp) -> str:
    """Ideal decode followed by logical classification of what is left."""
    return logical_effect(code, multiply(error, decode(code, syndrome_of(code, error))))


def distance_bruteforce(code: BaconShorCode, *, x_only: bool = False, max_n: int = 3) -> int:
    """Minimum weight of a trivial-syndrome operator acting nontrivially on the
    protected qubit, by enumerating every Pauli on the block."""
    n = code.n
    if n > max_n:
        raise ResourceGuardError(f"brute-force distance for n={n} enumerates 4^{n * n} operators")
    N = code.num_qubits
    x_stabs = [g.x for g in code.stabilizer_gens if g.x]
    z_stabs = [g.z for g in code.stabilizer_gens if g.z]
    full = 1 << N
    # an X-part is checked by Z stabilizers, a Z-part by X stabilizers
    x_ok = [x for x in range(full) if all(((x & s).bit_count() & 1) == 0 for s in z_stabs)]
    z_ok = [0] if x_only else [z for z in range(full) if all(((z & s).bit_count() & 1) == 0 for s in x_stabs)]
    best = None
    for x, z in itertools.product(x_ok, z_ok):
        w = (x | z).bit_count()
        if w == 0 or (best is not None and w >= best):
            continue
        if logical_effect(code, PauliOp(N, x, z)) != "I":
            best = w
    if best is None:
        raise RuntimeError("no nontrivial logical operator found")
    return best


def product(ops: Sequence[PauliOp], num_qubits: int) -> PauliOp:
    return reduce(multiply, ops, PauliOp(num_qubits))
