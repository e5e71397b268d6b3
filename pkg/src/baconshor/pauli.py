"""Phase-free Pauli operators packed into GF(2) bit-vectors."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence


class DimensionError(ValueError):
    """Raised when operators on different numbers of qubits are combined."""


_TOKEN = re.compile(r"([IXYZ])(\d+)")


@dataclass(frozen=True)
class PauliOp:
    """An n-qubit Pauli without phase.

    Bit ``q`` of ``x`` (``z``) is set when the operator has an X (Z)
    component on qubit ``q``; Y is both.
    """

    num_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self) -> None:
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        if (self.x | self.z) >> self.num_qubits:
            raise ValueError("bit-vector longer than num_qubits")
        if self.x < 0 or self.z < 0:
            raise ValueError("bit-vectors must be non-negative")

    @classmethod
    def identity(cls, num_qubits: int) -> PauliOp:
        return cls(num_qubits)

    @classmethod
    def single(cls, num_qubits: int, qubit: int, pauli: str) -> PauliOp:
        return cls.from_map(num_qubits, {qubit: pauli})

    @classmethod
    def from_map(cls, num_qubits: int, paulis: dict[int, str]) -> PauliOp:
        x = z = 0
        for q, p in paulis.items():
            if not 0 <= q < num_qubits:
                raise DimensionError(f"qubit {q} out of range for {num_qubits} qubits")
            if p not in "IXYZ" or len(p) != 1:
                raise ValueError(f"bad Pauli letter {p!r}")
            if p in "XY":
                x ^= 1 << q
            if p in "ZY":
                z ^= 1 << q
        return cls(num_qubits, x, z)

    @classmethod
    def from_support(cls, num_qubits: int, qubits: Iterable[int], pauli: str) -> PauliOp:
        """The tensor product of ``pauli`` on every listed qubit."""
        return cls.from_map(num_qubits, {q: pauli for q in qubits})

    @classmethod
    def from_string(cls, text: str, num_qubits: int | None = None) -> PauliOp:
        """Parse either the sparse form ``"X0 Z3"`` or a dense string ``"XIZ"``.

        The sparse form needs ``num_qubits``; ``"I"`` alone is the identity.
        """
        text = text.strip()
        if num_qubits is None:
            if not re.fullmatch(r"[IXYZ]*", text):
                raise ValueError("dense Pauli strings use only I, X, Y, Z")
            return cls.from_map(len(text), {q: p for q, p in enumerate(text) if p != "I"})
        if text in ("", "I"):
            return cls(num_qubits)
        paulis: dict[int, str] = {}
        for token in text.replace(",", " ").split():
            m = _TOKEN.fullmatch(token)
            if m is None:
                raise ValueError(f"cannot parse Pauli token {token!r}")
            q = int(m.group(2))
            if q in paulis:
                raise ValueError(f"qubit {q} listed twice")
            paulis[q] = m.group(1)
        return cls.from_map(num_qubits, paulis)

    def letter(self, qubit: int) -> str:
        return "IXZY"[((self.x >> qubit) & 1) | (((self.z >> qubit) & 1) << 1)]

    def support(self) -> list[int]:
        bits = self.x | self.z
        return [q for q in range(self.num_qubits) if (bits >> q) & 1]

    def __mul__(self, other: PauliOp) -> PauliOp:
        return multiply(self, other)

    def __str__(self) -> str:
        terms = [f"{self.letter(q)}{q}" for q in self.support()]
        return " ".join(terms) if terms else "I"

    def dense(self) -> str:
        return "".join(self.letter(q) for q in range(self.num_qubits))


def _check(p: PauliOp, q: PauliOp) -> None:
    if p.num_qubits != q.num_qubits:
        raise DimensionError(f"{p.num_qubits}-qubit and {q.num_qubits}-qubit operators")


def multiply(p: PauliOp, q: PauliOp) -> PauliOp:
    """Group product, ignoring phase."""
    _check(p, q)
    return PauliOp(p.num_qubits, p.x ^ q.x, p.z ^ q.z)


def symplectic_product(p: PauliOp, q: PauliOp) -> int:
    _check(p, q)
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) & 1


def commutes(p: PauliOp, q: PauliOp) -> bool:
    return symplectic_product(p, q) == 0


def weight(p: PauliOp) -> int:
    return (p.x | p.z).bit_count()


def _symplectic_vector(p: PauliOp) -> int:
    return p.x | (p.z << p.num_qubits)


def row_reduce(vectors: Iterable[int]) -> dict[int, int]:
    """Echelon basis keyed by pivot, the highest set bit of each row."""
    basis: dict[int, int] = {}
    for v in vectors:
        v = reduce_vector(v, basis)
        if v:
            basis[v.bit_length() - 1] = v
    return basis


def reduce_vector(v: int, basis: dict[int, int], pivots: Sequence[int] | None = None) -> int:
    if pivots is None:
        pivots = sorted(basis, reverse=True)
    for pivot in pivots:
        if (v >> pivot) & 1:
            v ^= basis[pivot]
    return v


def gf2_rank(vectors: Iterable[int]) -> int:
    return len(row_reduce(vectors))


def in_group(p: PauliOp, generators: Sequence[PauliOp]) -> bool:
    """True iff ``p`` is a product of ``generators`` (phases ignored)."""
    for g in generators:
        _check(p, g)
    basis = row_reduce(_symplectic_vector(g) for g in generators)
    return reduce_vector(_symplectic_vector(p), basis) == 0


class PauliGroup:
    """Membership tests against a fixed generating set, reduced once."""

    def __init__(self, generators: Sequence[PauliOp], num_qubits: int | None = None):
        if num_qubits is None:
            if not generators:
                raise ValueError("num_qubits required for an empty generating set")
            num_qubits = generators[0].num_qubits
        self.num_qubits = num_qubits
        for g in generators:
            if g.num_qubits != num_qubits:
                raise DimensionError("generators act on different numbers of qubits")
        self._basis = row_reduce(_symplectic_vector(g) for g in generators)
        self._pivots = sorted(self._basis, reverse=True)

    @property
    def rank(self) -> int:
        return len(self._basis)

    def __contains__(self, p: PauliOp) -> bool:
        if p.num_qubits != self.num_qubits:
            raise DimensionError("operator size does not match group")
        return reduce_vector(_symplectic_vector(p), self._basis, self._pivots) == 0
