import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fidlimit.appendix import signal_states
from fidlimit.linalg import (
    ContractError,
    as_density,
    child_rng,
    dagger,
    eigh,
    haar_unitary,
    partial_trace,
    psd_sqrt,
    random_density,
    random_pure_state,
    tensor,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _appendix_rho():
    a = signal_states()
    return sum(p * np.outer(v, v) for p, v in zip((0.49, 0.49, 0.02), a))


class TestEigh:
    def test_diagonal_sorted_descending(self):
        w, v = eigh(np.diag([0.2, 0.7, 0.1]))
        assert_allclose(w, [0.7, 0.2, 0.1])
        assert_allclose(np.abs(v), np.eye(3)[:, [1, 0, 2]], atol=1e-12)

    def test_identity(self):
        w, v = eigh(np.eye(3))
        assert_allclose(w, [1, 1, 1])
        assert_allclose(dagger(v) @ v, np.eye(3), atol=1e-12)

    def test_degenerate_ties_follow_basis_index(self):
        w, v = eigh(np.diag([0.3, 0.5, 0.3, 0.5]))
        assert_allclose(w, [0.5, 0.5, 0.3, 0.3])
        assert [int(np.argmax(np.abs(v[:, j]))) for j in range(4)] == [1, 3, 0, 2]

    def test_appendix_rho_against_characteristic_polynomial(self):
        rho = _appendix_rho()
        # oracle: roots of det(x I - rho) from trace, principal minors, determinant
        minors = sum(np.linalg.det(rho[np.ix_(ij, ij)]) for ij in [(0, 1), (0, 2), (1, 2)])
        roots = np.sort(np.roots([1, -np.trace(rho), minors, -np.linalg.det(rho)]).real)[::-1]
        w, _ = eigh(rho)
        assert_allclose(w, roots, atol=1e-12)
        assert_allclose(w, [0.74179, 0.24500, 0.01321], atol=5e-6)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ContractError):
            eigh(np.array([[0, 1], [0, 0]]))

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds, n=st.integers(1, 6))
    def test_reconstruction(self, seed, n):
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        a = g + dagger(g)
        w, v = eigh(a)
        assert np.max(np.abs(a - (v * w) @ dagger(v))) < 1e-9
        assert np.max(np.abs(dagger(v) @ v - np.eye(n))) < 1e-9
        assert np.all(np.diff(w) <= 0)


class TestTensorPartialTrace:
    def test_identity_tensor(self):
        assert_allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))

    def test_diagonal_tensor(self):
        a, b, c, d = 2.0, 3.0, 5.0, 7.0
        assert_allclose(tensor(np.diag([a, b]), np.diag([c, d])), np.diag([a * c, a * d, b * c, b * d]))

    def test_product_spectrum(self):
        rho = np.diag([0.9, 0.1])
        w, _ = eigh(tensor(rho, rho))
        assert_allclose(w, [0.81, 0.09, 0.09, 0.01])

    def test_trace_of_product_state(self):
        rng = np.random.default_rng(3)
        q = random_density(2, 2, rng)
        a = 0.6 * random_density(3, 2, rng)
        assert_allclose(partial_trace(tensor(q, a), (2, 3), "A"), 0.6 * q, atol=1e-12)
        assert_allclose(partial_trace(tensor(q, a), (2, 3), "Q"), a, atol=1e-12)

    def test_bell_state(self):
        psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        assert_allclose(partial_trace(np.outer(psi, psi), (2, 2), "A"), np.eye(2) / 2)

    def test_against_double_loop(self):
        rng = np.random.default_rng(11)
        m = random_density(6, 6, rng)
        dq, da = 2, 3
        oracle = np.zeros((dq, dq), dtype=complex)
        for i in range(dq):
            for j in range(dq):
                for k in range(da):
                    oracle[i, j] += m[i * da + k, j * da + k]
        assert np.max(np.abs(partial_trace(m, (dq, da), "A") - oracle)) < 1e-12
        oracle_q = np.zeros((da, da), dtype=complex)
        for i in range(da):
            for j in range(da):
                for k in range(dq):
                    oracle_q[i, j] += m[k * da + i, k * da + j]
        assert np.max(np.abs(partial_trace(m, (dq, da), "Q") - oracle_q)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            partial_trace(np.eye(5), (2, 3))

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, dq=st.integers(1, 4), da=st.integers(1, 4))
    def test_adjointness(self, seed, dq, da):
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(dq, dq)) + 1j * rng.normal(size=(dq, dq))
        m = rng.normal(size=(dq * da,) * 2) + 1j * rng.normal(size=(dq * da,) * 2)
        lhs = np.trace(tensor(g, np.eye(da)) @ m)
        rhs = np.trace(g @ partial_trace(m, (dq, da), "A"))
        assert abs(lhs - rhs) < 1e-10
        assert abs(np.trace(partial_trace(m, (dq, da))) - np.trace(m)) < 1e-12 * max(1, abs(np.trace(m)))


class TestPsdSqrt:
    def test_diagonal(self):
        assert_allclose(psd_sqrt(np.diag([4, 1]) / 5), np.diag([2, 1]) / math.sqrt(5), atol=1e-15)

    def test_projector_fixed(self):
        v = np.array([1, 1j, 0]) / math.sqrt(2)
        p = np.outer(v, v.conj())
        assert_allclose(psd_sqrt(p), p, atol=1e-8)

    def test_clamps_negative_roundoff(self):
        r = np.diag([0.5, 0.5, -1e-12])
        assert_allclose(psd_sqrt(r), np.diag([math.sqrt(0.5)] * 2 + [0.0]))

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, n=st.integers(1, 5))
    def test_square_and_commutation(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = random_density(n, int(rng.integers(1, n + 1)), rng)
        s = psd_sqrt(rho)
        assert np.max(np.abs(s @ s - rho)) < 1e-10
        assert np.max(np.abs(s @ rho - rho @ s)) < 1e-8
        assert np.linalg.eigvalsh(s)[0] > -1e-12


class TestDensityValidation:
    def test_subnormalized_ok(self):
        as_density(np.diag([0.2, 0.1]))

    def test_trace_above_one(self):
        with pytest.raises(ContractError):
            as_density(np.diag([0.8, 0.5]))

    def test_negative_eigenvalue(self):
        with pytest.raises(ContractError):
            as_density(np.diag([1.1, -0.1]))

    def test_small_negative_clamped(self):
        r = as_density(np.diag([1.0, -1e-10]))
        assert np.linalg.eigvalsh(r)[0] >= 0


class TestSampling:
    def test_dim_one(self):
        psi = random_pure_state(1, np.random.default_rng(0))
        assert abs(abs(psi[0]) - 1) < 1e-15

    def test_haar_unitary(self):
        u = haar_unitary(4, np.random.default_rng(0))
        assert np.max(np.abs(dagger(u) @ u - np.eye(4))) < 1e-10

    def test_haar_first_moment(self):
        # E|U_00|^2 = 1/dim for Haar unitaries
        rng = np.random.default_rng(5)
        vals = [abs(haar_unitary(3, rng)[0, 0]) ** 2 for _ in range(4000)]
        assert abs(np.mean(vals) - 1 / 3) < 0.015

    def test_random_density_moments(self):
        rng = np.random.default_rng(7)
        samples = [random_density(3, 3, rng) for _ in range(10_000)]
        eig_mean = np.mean([np.linalg.eigvalsh(r) for r in samples])
        assert abs(eig_mean - 1 / 3) < 0.01
        # Monte Carlo: E[rho] = I/3 by unitary invariance
        assert np.max(np.abs(np.mean(samples, axis=0) - np.eye(3) / 3)) < 0.01

    def test_random_density_rank(self):
        r = random_density(4, 2, np.random.default_rng(1))
        assert np.sum(np.linalg.eigvalsh(r) > 1e-12) == 2
        assert abs(np.trace(r) - 1) < 1e-12

    @pytest.mark.parametrize("args", [(0, 1), (2, 3), (2, 0)])
    def test_invalid_dims(self, args):
        with pytest.raises(ContractError):
            random_density(*args, np.random.default_rng(0))

    def test_determinism(self):
        a = haar_unitary(5, child_rng(42, 7))
        b = haar_unitary(5, child_rng(42, 7))
        c = haar_unitary(5, child_rng(42, 8))
        assert a.tobytes() == b.tobytes()
        assert a.tobytes() != c.tobytes()
