from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from baconshor.code import build_code
from baconshor.pauli import (
    DimensionError,
    PauliGroup,
    PauliOp,
    commutes,
    gf2_rank,
    in_group,
    multiply,
    symplectic_product,
    weight,
)

N = 6


def paulis(num_qubits: int = N):
    mask = (1 << num_qubits) - 1
    return st.builds(lambda x, z: PauliOp(num_qubits, x, z), st.integers(0, mask), st.integers(0, mask))


def anticommuting_positions(p: PauliOp, q: PauliOp) -> int:
    """Letter-by-letter count of sites where the two single-qubit Paulis differ
    and neither is the identity."""
    a, b = p.dense(), q.dense()
    return sum(1 for s, t in zip(a, b) if s != "I" and t != "I" and s != t)


class TestExamples:
    def test_identity_is_neutral(self):
        p = PauliOp.from_string("XZYI")
        assert multiply(PauliOp.identity(4), p) == p

    def test_x_squared_is_identity(self):
        x1 = PauliOp.single(3, 1, "X")
        assert multiply(x1, x1) == PauliOp.identity(3)

    def test_x_times_z_is_y_without_phase(self):
        y = multiply(PauliOp.single(3, 1, "X"), PauliOp.single(3, 1, "Z"))
        assert (y.x, y.z) == (0b010, 0b010)
        assert y.letter(1) == "Y"

    def test_commutation_examples(self):
        assert not commutes(PauliOp.from_string("X"), PauliOp.from_string("Z"))
        assert commutes(PauliOp.from_string("XX"), PauliOp.from_string("ZZ"))
        p = PauliOp.from_string("XYZ")
        assert commutes(p, PauliOp.identity(3))

    def test_weight_examples(self):
        assert weight(PauliOp.identity(5)) == 0
        assert weight(PauliOp.from_string("Y0", 3)) == 1
        assert weight(PauliOp.from_string("X0 Z1", 3)) == 2

    def test_group_membership_examples(self):
        gens = [PauliOp.from_string("XXI"), PauliOp.from_string("IZZ")]
        assert in_group(multiply(*gens), gens)
        assert in_group(PauliOp.identity(3), gens)
        assert in_group(PauliOp.identity(3), [])

    def test_gauge_group_membership(self):
        code = build_code(3)
        same_row_zz = PauliOp.from_support(9, [code.qubit(0, 0), code.qubit(0, 1)], "Z")
        assert in_group(same_row_zz, list(code.gauge_gens))
        assert same_row_zz in code._gauge_group
        # the logical Z string is outside the gauge group together with the stabilizers
        assert not in_group(code.logical_z, list(code.stabilizer_gens) + list(code.gauge_gens))


class TestParsing:
    def test_sparse_and_dense_forms_agree(self):
        assert PauliOp.from_string("X0 Y2 Z3", 4) == PauliOp.from_string("XIYZ")

    def test_str_round_trip(self):
        p = PauliOp.from_string("ZIYX")
        assert PauliOp.from_string(str(p), 4) == p
        assert str(PauliOp.identity(2)) == "I"

    @pytest.mark.parametrize("bad", ["X0 X0", "Q1", "X9"])
    def test_rejects_bad_sparse_input(self, bad):
        with pytest.raises(ValueError):
            PauliOp.from_string(bad, 4)

    def test_rejects_overlong_bits(self):
        with pytest.raises(ValueError):
            PauliOp(2, x=0b100)

    def test_mixed_sizes_raise(self):
        with pytest.raises(DimensionError):
            multiply(PauliOp(2), PauliOp(3))
        with pytest.raises(DimensionError):
            commutes(PauliOp(2), PauliOp(3))


class TestProperties:
    @given(paulis(), paulis(), paulis())
    def test_multiply_is_associative_and_commutative(self, p, q, r):
        assert multiply(multiply(p, q), r) == multiply(p, multiply(q, r))
        assert multiply(p, q) == multiply(q, p)

    @given(paulis())
    def test_multiply_is_self_inverse(self, p):
        assert multiply(p, p) == PauliOp.identity(N)

    @given(paulis(), paulis())
    def test_commutes_matches_letterwise_oracle(self, p, q):
        assert commutes(p, q) == (anticommuting_positions(p, q) % 2 == 0)
        assert commutes(p, q) == commutes(q, p)

    @given(paulis(), paulis(), paulis())
    def test_symplectic_form_is_bilinear(self, p, q, r):
        assert symplectic_product(p, multiply(q, r)) == symplectic_product(p, q) ^ symplectic_product(p, r)

    @given(paulis())
    def test_weight_counts_non_identity_letters(self, p):
        assert weight(p) == sum(1 for c in p.dense() if c != "I")

    @given(st.lists(paulis(), min_size=1, max_size=5), st.randoms(use_true_random=False))
    def test_membership_independent_of_generator_order(self, gens, rnd):
        target = gens[0]
        for g in gens[1:]:
            if rnd.random() < 0.5:
                target = multiply(target, g)
        probes = [target, PauliOp.single(N, 0, "Y"), PauliOp.from_string("XZXZXZ")]
        shuffled = gens[:]
        rnd.shuffle(shuffled)
        for probe in probes:
            assert in_group(probe, gens) == in_group(probe, shuffled) == (probe in PauliGroup(shuffled))
        assert in_group(target, gens)

    @given(st.lists(paulis(3), max_size=6))
    def test_membership_matches_span_enumeration(self, gens):
        span = set()
        for bits in itertools.product((0, 1), repeat=len(gens)):
            acc = PauliOp.identity(3)
            for b, g in zip(bits, gens):
                if b:
                    acc = multiply(acc, g)
            span.add((acc.x, acc.z))
        assert len(span) == 2 ** gf2_rank(g.x | g.z << 3 for g in gens)
        rng = random.Random(len(gens))
        for _ in range(10):
            probe = PauliOp(3, rng.randrange(8), rng.randrange(8))
            assert in_group(probe, gens) == ((probe.x, probe.z) in span)
