from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from baconshor.code import (
    BaconShorCode,
    PreconditionError,
    ResourceGuardError,
    Syndrome,
    build_code,
    correct_and_classify,
    decode,
    distance_bruteforce,
    gauge_factorization,
    logical_effect,
    parity_vector_fails,
    product,
    repetition_decode,
    syndrome_of,
)
from baconshor.pauli import PauliOp, commutes, in_group, multiply, weight


def random_pauli(rng: random.Random, N: int) -> PauliOp:
    return PauliOp(N, rng.getrandbits(N), rng.getrandbits(N))


def random_gauge_element(rng: random.Random, code: BaconShorCode) -> PauliOp:
    return product([g for g in code.gauge_gens if rng.random() < 0.5], code.num_qubits)


def decode_oracle(checks, n):
    """Exhaustive minimum-weight repetition decoding; ties go to the pattern
    that flips position 0."""
    best = None
    for bits in itertools.product((0, 1), repeat=n):
        if any(bits[i] ^ bits[i + 1] != c for i, c in enumerate(checks)):
            continue
        key = (sum(bits), 0 if bits[0] else 1)
        if best is None or key < best[0]:
            best = (key, bits)
    return [i for i, b in enumerate(best[1]) if b]


class TestStructure:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
    def test_generator_counts_and_weights(self, n):
        code = build_code(n)
        assert code.parameters == (n * n, 1, n)
        assert len(code.stabilizer_gens) == 2 * (n - 1)
        assert len(code.gauge_gens) == 2 * n * (n - 1)
        assert all(weight(g) == 2 * n for g in code.stabilizer_gens)
        assert all(weight(g) == 2 for g in code.gauge_gens)
        assert weight(code.logical_x) == weight(code.logical_z) == n

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
    def test_commutation_relations(self, n):
        code = build_code(n)
        stabs = code.stabilizer_gens
        assert all(commutes(a, b) for a, b in itertools.combinations(stabs, 2))
        for g in code.gauge_gens:
            assert all(commutes(g, s) for s in stabs)
            assert commutes(g, code.logical_x) and commutes(g, code.logical_z)
        for s in stabs:
            assert commutes(s, code.logical_x) and commutes(s, code.logical_z)
        assert not commutes(code.logical_x, code.logical_z)

    def test_gauge_group_is_non_abelian(self, code3):
        assert any(not commutes(a, b) for a, b in itertools.combinations(code3.gauge_gens, 2))

    @pytest.mark.parametrize("n", [2, 3, 5, 7])
    def test_every_stabilizer_factorizes_into_gauge_pairs(self, n):
        code = build_code(n)
        for sid in code.stabilizer_ids:
            factors = gauge_factorization(code, sid)
            assert len(factors) == n
            assert all(f in code.gauge_gens for f in factors)
            assert product(factors, code.num_qubits) == code.stabilizer(sid)

    def test_factorization_example_n3(self, code3):
        factors = gauge_factorization(code3, ("X", 0))
        expected = [PauliOp.from_support(9, [code3.qubit(0, k), code3.qubit(1, k)], "X") for k in range(3)]
        assert factors == expected

    def test_factorization_example_n2(self):
        code = build_code(2)
        factors = gauge_factorization(code, ("Z", 0))
        assert factors == [PauliOp.from_support(4, [code.qubit(k, 0), code.qubit(k, 1)], "Z") for k in range(2)]

    def test_small_examples(self):
        code = build_code(3)
        assert len(code.stabilizer_gens) == 4 and len(code.gauge_gens) == 12 and code.num_qubits == 9
        two = build_code(2)
        assert len(two.stabilizer_gens) == 2 and all(weight(s) == 4 for s in two.stabilizer_gens)
        assert build_code(5).parameters == (25, 1, 5)

    def test_index_maps(self, code):
        for q in range(code.num_qubits):
            assert code.qubit(*code.coords(q)) == q
        with pytest.raises(IndexError):
            code.qubit(code.n, 0)

    def test_rejects_tiny_codes(self):
        with pytest.raises(ValueError):
            build_code(1)


class TestSyndromeAndDecode:
    def test_identity_has_trivial_syndrome(self, code):
        assert syndrome_of(code, PauliOp(code.num_qubits)).is_trivial()

    def test_single_z_example(self, code3):
        s = syndrome_of(code3, PauliOp.single(9, code3.qubit(0, 0), "Z"))
        assert s == Syndrome((1, 0), (0, 0))

    def test_gauge_generators_have_trivial_syndrome(self, code):
        assert all(syndrome_of(code, g).is_trivial() for g in code.gauge_gens)

    def test_trivial_syndrome_decodes_to_identity(self, code):
        zero = (0,) * (code.n - 1)
        assert decode(code, Syndrome(zero, zero)) == PauliOp(code.num_qubits)

    def test_decode_examples(self, code3):
        assert decode(code3, Syndrome((1, 0), (0, 0))) == PauliOp.single(9, code3.qubit(0, 0), "Z")
        five = build_code(5)
        assert decode(five, Syndrome((0, 1, 1, 0), (0, 0, 0, 0))) == PauliOp.single(25, five.qubit(2, 0), "Z")

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_repetition_decode_matches_exhaustive_oracle(self, n):
        for checks in itertools.product((0, 1), repeat=n - 1):
            assert repetition_decode(checks, n) == decode_oracle(checks, n)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_parity_vector_fails_oracle(self, n):
        for bits in itertools.product((0, 1), repeat=n):
            # the decoder restores a pattern; a failure leaves the complement
            flipped = set(decode_oracle([bits[i] ^ bits[i + 1] for i in range(n - 1)], n))
            restored = [b ^ (i in flipped) for i, b in enumerate(bits)]
            assert parity_vector_fails(bits) == bool(restored[0])

    def test_decode_output_is_low_weight(self, code):
        rng = random.Random(7)
        for _ in range(50):
            e = random_pauli(rng, code.num_qubits)
            c = decode(code, syndrome_of(code, e))
            assert weight(c) <= 2 * (code.n // 2)
            assert syndrome_of(code, multiply(e, c)).is_trivial()


class TestLogicalEffect:
    def test_gauge_generators_act_trivially(self, code):
        assert all(logical_effect(code, g) == "I" for g in code.gauge_gens)

    def test_logical_operators(self, code):
        assert logical_effect(code, code.logical_z) == "Z"
        assert logical_effect(code, code.logical_x) == "X"
        assert logical_effect(code, multiply(code.logical_x, code.logical_z)) == "Y"

    def test_same_row_zz_is_gauge(self, code3):
        zz = PauliOp.from_support(9, [code3.qubit(0, 0), code3.qubit(0, 1)], "Z")
        assert logical_effect(code3, zz) == "I"

    def test_other_columns_are_equivalent_logicals(self, code):
        for c in range(code.n):
            assert logical_effect(code, PauliOp.from_support(code.num_qubits, code.column(c), "Z")) == "Z"
            assert logical_effect(code, PauliOp.from_support(code.num_qubits, code.row(c), "X")) == "X"

    def test_nontrivial_syndrome_is_rejected(self, code3):
        with pytest.raises(PreconditionError):
            logical_effect(code3, PauliOp.single(9, 0, "X"))

    @given(st.integers(0, 2**32))
    def test_invariant_under_gauge_and_stabilizer_multiplication(self, seed):
        rng = random.Random(seed)
        code = build_code(3)
        base = rng.choice([PauliOp(9), code.logical_x, code.logical_z, multiply(code.logical_x, code.logical_z)])
        stab = product([s for s in code.stabilizer_gens if rng.random() < 0.5], 9)
        dressed = multiply(multiply(base, stab), random_gauge_element(rng, code))
        assert logical_effect(code, dressed) == logical_effect(code, base)


class TestDecoderGuarantees:
    def test_all_low_weight_errors_corrected_n3(self, code3):
        N = 9
        for w in (0, 1):
            for qubits in itertools.combinations(range(N), w):
                for letters in itertools.product("XYZ", repeat=w):
                    e = PauliOp.from_map(N, dict(zip(qubits, letters)))
                    assert correct_and_classify(code3, e) == "I"

    def test_same_line_pairs_corrected_n3(self, code3):
        """Pairs on one row or column whose X part stays in one column and Z
        part in one row are a single-qubit error up to gauge, so they decode
        to I.  The other same-line pairs (e.g. XX along a row) hit two columns
        and are not all correctable at distance 3."""
        lines = [code3.row(r) for r in range(3)] + [code3.column(c) for c in range(3)]
        checked = failed_other = 0
        for line in lines:
            for a, b in itertools.combinations(line, 2):
                for pa, pb in itertools.product("XYZ", repeat=2):
                    e = PauliOp.from_map(9, {a: pa, b: pb})
                    x_cols = {code3.coords(q)[1] for q in range(9) if (e.x >> q) & 1}
                    z_rows = {code3.coords(q)[0] for q in range(9) if (e.z >> q) & 1}
                    if len(x_cols) <= 1 and len(z_rows) <= 1:
                        assert correct_and_classify(code3, e) == "I"
                        checked += 1
                    elif correct_and_classify(code3, e) != "I":
                        failed_other += 1
        assert checked == 6 * 3 * 5 and failed_other > 0

    def test_sampled_errors_up_to_half_distance_n5(self):
        code = build_code(5)
        rng = random.Random(11)
        for _ in range(2000):
            qubits = rng.sample(range(25), rng.randint(1, 2))
            e = PauliOp.from_map(25, {q: rng.choice("XYZ") for q in qubits})
            assert correct_and_classify(code, e) == "I"

    def test_gauge_quotient_invariance_n5(self):
        code = build_code(5)
        rng = random.Random(5)
        for _ in range(500):
            e = random_pauli(rng, 25)
            t = rng.choice(code.gauge_gens)
            assert decode(code, syndrome_of(code, e)) == decode(code, syndrome_of(code, multiply(e, t)))


class TestDistance:
    def test_n2(self):
        assert distance_bruteforce(build_code(2)) == 2

    def test_n3(self, code3):
        assert distance_bruteforce(code3) == 3

    def test_n3_x_only(self, code3):
        assert distance_bruteforce(code3, x_only=True) == 3

    def test_guard(self):
        with pytest.raises(ResourceGuardError):
            distance_bruteforce(build_code(5))
