"""Batch evaluation of fault sets on an exRec via precomputed signatures.

Everything in an exRec is linear over GF(2) except the classical decisions,
so each fault action is summarised once by its *signature*: the flips it
causes in every bit the evaluation ever reads.  Those bits are

* the input parities of every classical node,
* the column parities of the X part and the row parities of the Z part of
  the frame on each gate block just before the gate (the cut), and
* the same parities on each output block at the end.

A fault set is then evaluated by XORing signatures, dropping faults whose
verification group fired, and replaying each node through a lookup table
that XORs in the signature of the correction it applies.  The result agrees
with :func:`baconshor.faultsim.exrec_correct`; the test-suite checks this on
random assignments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .circuit import CNOT, HADAMARD, MEAS_Z, MEASUREMENTS, PREPS, CircuitError
from .code import parity_vector_fails
from .faultsim import FLIP, fault_actions, node_decision

WORD = 64


@dataclass(frozen=True)
class Field:
    name: str
    word: int
    shift: int
    width: int


def _layout(widths: list[tuple[str, int]]) -> tuple[list[Field], int]:
    fields = []
    word, used = 0, 0
    for name, width in widths:
        if width > WORD:
            raise CircuitError(f"field {name} wider than a machine word")
        if used + width > WORD:
            word, used = word + 1, 0
        fields.append(Field(name, word, used, width))
        used += width
    return fields, word + 1


def _confirm_names(node) -> list[str]:
    m = len(node.checks)
    return [f"{node.name}#{i}" for i in range(len(node.confirm) // m)] if node.confirm else []


class CompiledExRec:
    """Signature tables for one exRec."""

    def __init__(self, exrec, batch: int = 1 << 18):
        self.exrec = exrec
        self.batch = batch
        circuit = exrec.circuit
        code = exrec.code
        n = code.n
        self.num_locations = len(circuit.locations)

        widths = []
        for node in circuit.nodes:
            widths.append((node.name, node.width - len(node.confirm)))
            widths += [(name, len(node.checks)) for name in _confirm_names(node)]
        frame_blocks = [("cut", b) for b in exrec.gate_blocks] + [("out", b) for b in circuit.outputs]
        for stage, b in frame_blocks:
            widths += [(f"{stage}:{b}:x", n), (f"{stage}:{b}:z", n)]
        self.fields, self.words = _layout(widths)
        by_name = {f.name: f for f in self.fields}

        rows = self._basis_rows(circuit)
        X, Z, records, snap = self._propagate(circuit, rows, exrec.gate_time)
        R = len(rows)

        bits = np.zeros((R, self.words), dtype=np.uint64)

        def put(field: Field, j: int, vec: np.ndarray) -> None:
            bits[:, field.word] |= vec.astype(np.uint64) << np.uint64(field.shift + j)

        def parity(tags) -> np.ndarray:
            vec = np.zeros(R, dtype=bool)
            for tag in tags:
                vec ^= records[tag]
            return vec

        for node in circuit.nodes:
            m = len(node.checks)
            main = node.checks + ((node.raw,) if node.kind == "logical" else ())
            for j, tags in enumerate(main):
                put(by_name[node.name], j, parity(tags))
            for c, name in enumerate(_confirm_names(node)):
                for j, tags in enumerate(node.confirm[c * m : (c + 1) * m]):
                    put(by_name[name], j, parity(tags))
        for stage, b in frame_blocks:
            fx, fz = snap if stage == "cut" else (X, Z)
            blk = circuit.block_map[b].qubits
            for j in range(n):
                col = np.zeros(R, dtype=bool)
                row = np.zeros(R, dtype=bool)
                for i in range(n):
                    col ^= fx[blk[code.qubit(i, j)]]
                    row ^= fz[blk[code.qubit(j, i)]]
                put(by_name[f"{stage}:{b}:x"], j, col)
                put(by_name[f"{stage}:{b}:z"], j, row)

        self._row_bits = bits
        self._build_location_tables(circuit, rows, bits)
        self._build_node_tables(circuit, rows, bits, by_name)
        fail_table = np.array([parity_vector_fails([(v >> i) & 1 for i in range(n)]) for v in range(1 << n)])
        self._logical_table = fail_table.astype(np.uint8)
        self._frame_fields = [
            [by_name[f"{stage}:{b}:{p}"] for b in names for p in "xz"]
            for stage, names in (("cut", exrec.gate_blocks), ("out", circuit.outputs))
        ]

    # compilation

    @staticmethod
    def _basis_rows(circuit) -> list[tuple]:
        """(kind, time, qubits, pauli, owner): single Paulis after a
        location, an outcome flip, or a correction target of a node."""
        rows = []
        for loc, (t, op) in enumerate(circuit.locations):
            if op.kind in MEASUREMENTS:
                rows.append(("flip", t, (), op.tag, loc))
            else:
                for q in op.qubits:
                    rows.append(("loc", t, (q,), "X", loc))
                    rows.append(("loc", t, (q,), "Z", loc))
        for j, node in enumerate(circuit.nodes):
            if node.kind == "decode":
                for q in node.targets:
                    rows.append(("node", node.apply_after, (q,), node.pauli, j))
            elif node.kind == "logical":
                rows.append(("node", node.apply_after, tuple(node.targets), node.pauli, j))
        return rows

    @staticmethod
    def _propagate(circuit, rows, cut):
        Q, R = circuit.num_qubits, len(rows)
        X = np.zeros((Q, R), dtype=bool)
        Z = np.zeros((Q, R), dtype=bool)
        inject: dict[int, list[tuple[int, tuple]]] = {}
        flips: dict[str, int] = {}
        for r, (kind, t, qubits, pauli, _) in enumerate(rows):
            if kind == "flip":
                flips[pauli] = r
            else:
                inject.setdefault(t, []).append((r, qubits, pauli))
        records: dict[str, np.ndarray] = {}
        snap = (X.copy(), Z.copy())
        for t, ops in enumerate(circuit.timesteps):
            if t == cut:
                snap = (X.copy(), Z.copy())
            for op in ops:
                if op.kind == CNOT:
                    c, tg = op.qubits
                    X[tg] ^= X[c]
                    Z[c] ^= Z[tg]
                elif op.kind == HADAMARD:
                    (q,) = op.qubits
                    X[q], Z[q] = Z[q].copy(), X[q].copy()
                elif op.kind in MEASUREMENTS:
                    (q,) = op.qubits
                    rec = (X[q] if op.kind == MEAS_Z else Z[q]).copy()
                    rec[flips[op.tag]] ^= True
                    records[op.tag] = rec
                    X[q] = False
                    Z[q] = False
                elif op.kind in PREPS:
                    (q,) = op.qubits
                    X[q] = False
                    Z[q] = False
            for r, qubits, pauli in inject.get(t, ()):
                for q in qubits:
                    if pauli == "X":
                        X[q, r] ^= True
                    else:
                        Z[q, r] ^= True
        return X, Z, records, snap

    def _build_location_tables(self, circuit, rows, bits) -> None:
        per_loc: dict[int, dict[tuple, int]] = {}
        for r, (kind, _, qubits, pauli, owner) in enumerate(rows):
            if kind == "node":
                continue
            key = FLIP if kind == "flip" else (qubits[0], pauli)
            per_loc.setdefault(owner, {})[key] = r
        self._loc_basis = per_loc
        sigs, actions, offsets, counts = [], [], [], []
        for loc, (_, op) in enumerate(circuit.locations):
            loc_sigs = [self.signature(loc, action) for action in fault_actions(op)]
            uniq, first = np.unique(np.array(loc_sigs), axis=0, return_index=True)
            order = np.argsort(first)
            offsets.append(offsets[-1] + counts[-1] if counts else 0)
            counts.append(len(uniq))
            sigs.append(uniq[order])
            actions.append(tuple(fault_actions(op)[i] for i in first[order]))
        self.sigs = np.concatenate(sigs)
        self.actions = actions
        self.offsets = np.array(offsets, dtype=np.int64)
        self.counts = np.array(counts, dtype=np.int64)

        # verification groups
        verify = [node for node in circuit.nodes if node.kind == "verify"]
        loc_group = np.full(self.num_locations, -1, dtype=np.int64)
        gword, gshift = [], []
        by_name = {f.name: f for f in self.fields}
        for g, node in enumerate(verify):
            if (loc_group[list(node.discard)] >= 0).any():
                raise CircuitError("verification groups overlap")
            loc_group[list(node.discard)] = g
            f = by_name[node.name]
            gword.append(f.word)
            gshift.append(f.shift)
        self.row_group = np.repeat(loc_group, self.counts)
        self.group_word = np.array(gword, dtype=np.int64)
        self.group_shift = np.array(gshift, dtype=np.uint64)
        # a flag may only be raised by its own group
        for g in range(len(verify)):
            raised = (self.sigs[:, gword[g]] >> np.uint64(gshift[g])) & np.uint64(1)
            if np.any((raised == 1) & (self.row_group != g)):
                raise CircuitError(f"flag of {verify[g].name} reachable from outside its group")

    def _build_node_tables(self, circuit, rows, bits, by_name) -> None:
        node_rows: dict[int, list[int]] = {}
        for r, (kind, *_rest) in enumerate(rows):
            if kind == "node":
                node_rows.setdefault(rows[r][4], []).append(r)
        self.node_tables = []
        for j, node in enumerate(circuit.nodes):
            if node.kind == "verify":
                continue
            f = by_name[node.name]
            confirm = [by_name[name] for name in _confirm_names(node)]
            corr = bits[node_rows[j]]
            # a correction must not change what this node or earlier ones read
            for earlier in circuit.nodes[: j + 1]:
                for e in [by_name[earlier.name]] + [by_name[x] for x in _confirm_names(earlier)]:
                    mask = np.uint64(((1 << e.width) - 1) << e.shift)
                    if np.any(corr[:, e.word] & mask):
                        raise CircuitError(f"correction of {node.name} feeds back into {earlier.name}")
            m = len(node.checks)
            table = np.zeros((1 << f.width, self.words), dtype=np.uint64)
            for idx in range(1 << f.width):
                main = [(idx >> i) & 1 for i in range(f.width)]
                # the table assumes every confirming round agrees; disagreement is masked at run time
                chosen = node_decision(node, main[:m] * (1 + len(confirm)) + main[m:])
                if node.kind == "decode":
                    for i in chosen:
                        table[idx] ^= corr[i]
                elif chosen:
                    table[idx] ^= corr[0]
            self.node_tables.append((f, np.uint64((1 << m) - 1), confirm, table))

    # evaluation

    def _field_value(self, state: np.ndarray, f: Field) -> np.ndarray:
        return ((state[:, f.word] >> np.uint64(f.shift)) & np.uint64((1 << f.width) - 1)).astype(np.intp)

    def fails(self, sig_rows: np.ndarray) -> np.ndarray:
        """Failure flag for each row of signature indices (shape (B, k))."""
        sig_rows = np.asarray(sig_rows, dtype=np.int64)
        if sig_rows.ndim != 2:
            raise ValueError("expected a 2-D array of signature indices")
        state = np.bitwise_xor.reduce(self.sigs[sig_rows], axis=1)
        groups = self.row_group[sig_rows]
        if len(self.group_word) and (groups >= 0).any():
            g = np.where(groups >= 0, groups, 0)
            words = self.group_word[g]
            flag = (np.take_along_axis(state, words, axis=1) >> self.group_shift[g]) & np.uint64(1)
            drop = (flag == 1) & (groups >= 0)
            if drop.any():
                removed = np.where(drop[:, :, None], self.sigs[sig_rows], np.uint64(0))
                state ^= np.bitwise_xor.reduce(removed, axis=1)
        for f, check_mask, confirm, table in self.node_tables:
            idx = self._field_value(state, f)
            update = table[idx]
            if confirm:
                checks = idx & int(check_mask)
                agree = np.ones(len(state), dtype=bool)
                for c in confirm:
                    agree &= self._field_value(state, c) == checks
                update[~agree] = 0
            state ^= update
        cut = [self._logical_table[self._field_value(state, f)] for f in self._frame_fields[0]]
        out = [self._logical_table[self._field_value(state, f)] for f in self._frame_fields[1]]
        cx0, cz0, cx1, cz1 = cut
        ox0, oz0, ox1, oz1 = out
        wrong = (ox0 ^ cx0) | (oz0 ^ cz0 ^ cz1) | (ox1 ^ cx1 ^ cx0) | (oz1 ^ cz1)
        return wrong.astype(bool)

    def signature(self, loc: int, action: str) -> np.ndarray:
        """Signature of one fault action (any action, not just a representative)."""
        op = self.exrec.circuit.locations[loc][1]
        if action not in fault_actions(op):
            raise ValueError(f"{action!r} is not a fault of {op.kind}")
        table = self._loc_basis[loc]
        sig = np.zeros(self.words, dtype=np.uint64)
        if action == FLIP:
            return sig ^ self._row_bits[table[FLIP]]
        for q, p in zip(op.qubits, action):
            if p in "XY":
                sig ^= self._row_bits[table[(q, "X")]]
            if p in "ZY":
                sig ^= self._row_bits[table[(q, "Z")]]
        return sig

    def sig_index(self, loc: int, action: str) -> int:
        """Row of the signature table holding ``action`` at ``loc``."""
        block = self.sigs[self.offsets[loc] : self.offsets[loc] + self.counts[loc]]
        hit = np.nonzero((block == self.signature(loc, action)).all(axis=1))[0]
        return int(self.offsets[loc] + hit[0])

    def malignant(self, loc_sets: np.ndarray) -> np.ndarray:
        """For each set of distinct locations (shape (S, k)), whether some
        choice of fault actions makes the exRec fail."""
        loc_sets = np.asarray(loc_sets, dtype=np.int64)
        S, k = loc_sets.shape
        result = np.zeros(S, dtype=bool)
        if S == 0:
            return result
        counts = self.counts[loc_sets]
        sizes = counts.prod(axis=1)
        cum = np.cumsum(sizes)
        start = 0
        while start < S:
            # take as many sets as fit in one batch (at least one)
            limit = (cum[start - 1] if start else 0) + self.batch
            stop = max(start + 1, int(np.searchsorted(cum, limit, side="right")))
            result[start:stop] = self._malignant_chunk(loc_sets[start:stop], counts[start:stop], sizes[start:stop])
            start = stop
        return result

    def _malignant_chunk(self, locs, counts, sizes) -> np.ndarray:
        total = int(sizes.sum())
        owner = np.repeat(np.arange(len(locs)), sizes)
        starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        local = np.arange(total, dtype=np.int64) - np.repeat(starts, sizes)
        k = locs.shape[1]
        rows = np.empty((total, k), dtype=np.int64)
        for i in range(k - 1, -1, -1):
            m = counts[owner, i]
            rows[:, i] = self.offsets[locs[owner, i]] + local % m
            local //= m
        fail = self.fails(rows)
        return np.logical_or.reduceat(fail, starts)

    def witness(self, locs) -> dict[int, str] | None:
        """A failing assignment on exactly these locations, if any."""
        locs = list(locs)
        choices = [range(int(self.counts[l])) for l in locs]
        for combo in itertools.product(*choices):
            rows = np.array([[int(self.offsets[l]) + c for l, c in zip(locs, combo)]])
            if self.fails(rows)[0]:
                return {l: self.actions[l][c] for l, c in zip(locs, combo)}
        return None

