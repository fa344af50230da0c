import math

import numpy as np
import pytest
import scipy.sparse as sparse

from ymspec.errors import ConfigurationError, DimensionMismatchError, ResourceError
from ymspec.fock import (
    FockVector,
    build_basis,
    expectation,
    ladder,
    number_operator,
    operator_from_text,
    operator_to_text,
    quantize,
    safe_block_indices,
)
from ymspec.symbols import PolynomialSymbol, convert

from oracles import ladder_quantize, random_symbol


def zz(D=1, mode=0):
    return PolynomialSymbol.zstar(D, mode) * PolynomialSymbol.z(D, mode)


class TestBasis:
    def test_counting_small(self):
        b = build_basis(1, 3)
        assert b.size == 4
        assert [tuple(s) for s in b.states] == [(0,), (1,), (2,), (3,)]

    def test_counting_two_modes(self):
        assert build_basis(2, 2).size == 6

    def test_counting_nine_modes(self):
        assert build_basis(9, 6).size == math.comb(15, 6) == 5005

    def test_enumeration_order(self):
        b = build_basis(2, 2)
        expected = [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
        assert [tuple(s) for s in b.states] == expected

    def test_cap(self):
        with pytest.raises(ResourceError):
            build_basis(9, 8, cap=1000)

    def test_invalid_args(self):
        with pytest.raises(ConfigurationError):
            build_basis(0, 3)
        with pytest.raises(ConfigurationError):
            build_basis(2, -1)

    def test_index_lookup_round_trip(self):
        b = build_basis(3, 5)
        idx = b.index_of(b.states)
        assert np.array_equal(idx, np.arange(b.size))


class TestLadder:
    def test_annihilate_vacuum(self):
        b = build_basis(2, 3)
        a0 = ladder(b, 0, "annihilate")
        vac = FockVector.vacuum(b)
        assert np.abs(a0.matrix @ vac.amplitudes).max() == 0.0

    def test_ccr_below_cutoff(self):
        b = build_basis(2, 5)
        for m in range(2):
            c = ladder(b, m, "create")
            a = ladder(b, m, "annihilate")
            comm = (a.matrix @ c.matrix - c.matrix @ a.matrix).toarray()
            inside = b.degrees < b.N_max
            for i in np.flatnonzero(inside):
                row = comm[i]
                assert abs(row[i] - 1.0) < 1e-14
                row[i] = 0.0
                assert np.abs(row).max() < 1e-14

    def test_create_then_annihilate(self):
        b = build_basis(1, 5)
        c = ladder(b, 0, "create")
        a = ladder(b, 0, "annihilate")
        prod = (a.matrix @ c.matrix).diagonal().real
        assert np.allclose(prod[:-1], np.arange(1, 6))

    def test_adjointness(self):
        b = build_basis(2, 4)
        c = ladder(b, 1, "create")
        a = ladder(b, 1, "annihilate")
        assert (abs(c.matrix - a.matrix.conj().T)).max() < 1e-15

    def test_invalid_mode(self):
        b = build_basis(2, 2)
        with pytest.raises(ConfigurationError):
            ladder(b, 5, "create")
        with pytest.raises(ConfigurationError):
            ladder(b, 0, "destroy")


class TestQuantize:
    def test_normal_number(self):
        b = build_basis(1, 6)
        q = quantize(zz(), "normal", b)
        assert np.allclose(q.matrix.diagonal().real, np.arange(7))

    def test_antinormal_shift(self):
        b = build_basis(1, 6)
        q = quantize(zz(), "antinormal", b)
        # N + 1 away from the truncation edge
        assert np.allclose(q.matrix.diagonal().real[:-1], np.arange(1, 7))

    def test_constant_is_identity(self):
        b = build_basis(2, 3)
        s = PolynomialSymbol.constant(2, 1.0)
        for conv in ("normal", "weyl", "antinormal"):
            q = quantize(s, conv, b)
            assert (abs(q.matrix - sparse.identity(b.size))).max() < 1e-15

    def test_mode_mismatch(self):
        b = build_basis(2, 3)
        with pytest.raises(DimensionMismatchError):
            quantize(zz(1), "normal", b)

    def test_matches_ladder_oracle(self, rng):
        b = build_basis(2, 6)
        for conv in ("normal", "antinormal"):
            for _ in range(5):
                s = random_symbol(rng, 2, 4, n_terms=6)
                fast = quantize(s, conv, b).matrix
                slow = ladder_quantize(s, conv, b)
                assert (abs(fast - slow)).max() < 1e-12

    def test_antinormal_route_equivalence(self, rng):
        # direct anti-normal ordering vs flow to normal form, on the safe block
        b = build_basis(2, 8)
        for _ in range(10):
            s = random_symbol(rng, 2, 4, n_terms=8)
            direct = quantize(s, "antinormal", b).matrix
            via_normal = quantize(convert(s, "antinormal", "normal"), "normal", b).matrix
            safe = safe_block_indices(b, 4)
            diff = (direct - via_normal).toarray()[np.ix_(safe, safe)]
            assert np.abs(diff).max() < 1e-10

    def test_hermiticity_of_symmetric_symbols(self, rng):
        b = build_basis(2, 6)
        for conv in ("normal", "weyl", "antinormal"):
            s = random_symbol(rng, 2, 4, hermitian=True)
            q = quantize(s, conv, b)
            assert q.hermiticity_defect() < 1e-12

    def test_positivity_of_antinormal_modulus_squares(self, rng):
        b = build_basis(2, 8)
        for _ in range(5):
            # p(z) polynomial in z only; |p|^2 has non-negative anti-normal operator
            terms = {}
            for _ in range(4):
                beta = tuple(int(x) for x in rng.integers(0, 2, 2))
                terms[((0, 0), beta)] = complex(rng.normal(), rng.normal())
            p = PolynomialSymbol(2, terms)
            s = p.conjugate() * p
            q = quantize(s, "antinormal", b)
            safe = safe_block_indices(b, s.degree)
            block = q.matrix.toarray()[np.ix_(safe, safe)]
            vals = np.linalg.eigvalsh(block)
            assert vals[0] > -1e-10


class TestNumberOperatorAndExpectation:
    def test_number_diagonal(self):
        b = build_basis(2, 3)
        n = number_operator(b)
        assert np.allclose(n.matrix.diagonal().real, b.degrees)

    def test_number_equals_quantized_symbol(self):
        b = build_basis(2, 4)
        s = zz(2, 0) + zz(2, 1)
        q = quantize(s, "normal", b)
        assert (abs(q.matrix - number_operator(b).matrix)).max() < 1e-13

    def test_trace_small_block(self):
        b = build_basis(1, 3)
        assert number_operator(b).matrix.diagonal().sum() == 6.0

    def test_expectation_identity_and_number(self):
        b = build_basis(2, 4)
        n = number_operator(b)
        vec = np.zeros(b.size, dtype=complex)
        idx = b.index_of(np.array([[1, 1]]))[0]
        vec[idx] = 2.0 - 1.0j
        psi = FockVector(b, vec)
        assert abs(expectation(n, psi) - 2.0) < 1e-14

    def test_expectation_zero_vector_rejected(self):
        b = build_basis(1, 2)
        with pytest.raises(ConfigurationError):
            expectation(number_operator(b), FockVector(b, np.zeros(3)))


class TestOperatorSerialization:
    def test_round_trip(self, rng):
        b = build_basis(2, 4)
        s = random_symbol(rng, 2, 3)
        q = quantize(s, "antinormal", b)
        text = operator_to_text(q, "antinormal")
        q2, header = operator_from_text(text)
        assert header["convention"] == "antinormal"
        assert header["D"] == 2 and header["N_max"] == 4
        assert (abs(q.matrix - q2.matrix)).max() < 1e-16
