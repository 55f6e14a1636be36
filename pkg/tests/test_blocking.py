import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from fidlimit.blocking import (
    block_ensemble,
    channel_dimension,
    converse_sweep,
    product_spectrum,
    sigma_d,
    sweep_csv,
    typical_stats,
    von_neumann_entropy,
)
from fidlimit.coding import SourceEnsemble, ensemble_density, eta
from fidlimit.linalg import ContractError

H_09 = 0.4689955935892812  # binary entropy of 0.9, bits


def _brute_values(spectrum, N):
    return sorted((math.prod(c) for c in itertools.product(spectrum, repeat=N)), reverse=True)


class TestEntropy:
    def test_binary(self):
        assert abs(von_neumann_entropy([0.9, 0.1]) - H_09) < 1e-15

    def test_uniform_and_pure(self):
        assert abs(von_neumann_entropy([0.25] * 4) - 2.0) < 1e-15
        assert von_neumann_entropy([1.0, 0.0]) == 0.0

    def test_bad_spectrum(self):
        with pytest.raises(ContractError):
            von_neumann_entropy([0.6, 0.5])
        with pytest.raises(ContractError):
            von_neumann_entropy([1.2, -0.2])


class TestProductSpectrum:
    def test_counts_and_multiplicities(self):
        ps = product_spectrum([0.9, 0.1], 3)
        assert sorted(ps.multiplicities) == [1, 1, 3, 3]
        assert ps.dimension == 8
        assert abs(ps.total_mass() - 1) < 1e-15

    def test_exact_integer_multiplicities(self):
        ps = product_spectrum([0.5, 0.3, 0.2], 60)
        assert sum(ps.multiplicities) == 3**60
        assert all(isinstance(m, int) for m in ps.multiplicities)

    def test_zero_eigenvalue(self):
        ps = product_spectrum([1.0, 0.0], 4)
        assert abs(ps.total_mass() - 1) < 1e-15
        assert sigma_d(ps, 16) == 1.0

    def test_cap(self):
        with pytest.raises(ContractError):
            product_spectrum([0.25] * 4, 200, cap=1000)

    @settings(max_examples=30, deadline=None)
    @given(p=st.floats(0.01, 0.99), N=st.integers(1, 8))
    def test_matches_brute_force(self, p, N):
        ps = product_spectrum([p, 1 - p], N)
        brute = _brute_values([max(p, 1 - p), min(p, 1 - p)], N)
        expanded = sorted(np.repeat(ps.values, ps.multiplicities), reverse=True)
        assert np.allclose(expanded, brute, rtol=1e-12, atol=0)


class TestSigmaD:
    def test_frozen_n20(self):
        # brute-force sum over all 2**20 eigenvalues gives 0.42176592518456785
        ps = product_spectrum([0.9, 0.1], 20)
        assert abs(sigma_d(ps, 41) - 0.42176592518456785) < 1e-14

    def test_frozen_n200(self):
        ps = product_spectrum([0.9, 0.1], 200)
        d = 15672867944704736
        # binomial oracle: classes k=0..9 whole, then a partial block of k=10
        whole = binom.cdf(9, 200, 0.1)
        taken = d - sum(math.comb(200, k) for k in range(10))
        oracle = whole + taken * 0.9**190 * 0.1**10
        assert abs(sigma_d(ps, d) - oracle) < 1e-12
        assert abs(sigma_d(ps, d) - 0.006450312678851562) < 1e-15

    def test_full_dimension(self):
        ps = product_spectrum([0.7, 0.2, 0.1], 5)
        assert abs(sigma_d(ps, ps.dimension) - 1) < 1e-14

    def test_uniform_spectrum(self):
        ps = product_spectrum([0.5, 0.5], 10)
        assert abs(sigma_d(ps, 37) - 37 / 1024) < 1e-15

    def test_out_of_range(self):
        with pytest.raises(ContractError):
            sigma_d(product_spectrum([0.5, 0.5], 2), 5)

    @settings(max_examples=30, deadline=None)
    @given(p=st.floats(0.05, 0.95), N=st.integers(1, 10), data=st.data())
    def test_matches_sorted_sum(self, p, N, data):
        d = data.draw(st.integers(1, 2**N))
        ps = product_spectrum([p, 1 - p], N)
        brute = _brute_values([p, 1 - p], N)
        assert abs(sigma_d(ps, d) - math.fsum(brute[:d])) < 1e-12


class TestTypical:
    def test_uniform_whole_space_is_typical(self):
        mass, dim = typical_stats(product_spectrum([0.5, 0.5], 12), 0.1)
        assert abs(mass - 1) < 1e-15 and dim == 4096

    def test_against_binomial(self):
        N, delta = 50, 0.1
        ps = product_spectrum([0.9, 0.1], N)
        lo, hi = -N * (H_09 + delta), -N * (H_09 - delta)
        ks = [k for k in range(N + 1)
              if lo < (N - k) * math.log2(0.9) + k * math.log2(0.1) < hi]
        mass, dim = typical_stats(ps, delta)
        assert abs(mass - sum(binom.pmf(k, N, 0.1) for k in ks)) < 1e-12
        assert dim == sum(math.comb(N, k) for k in ks)

    def test_delta_positive(self):
        with pytest.raises(ContractError):
            typical_stats(product_spectrum([0.5, 0.5], 2), 0.0)


@pytest.fixture(scope="module")
def rows():
    return converse_sweep([0.9, 0.1], 0.1, range(1, 201))


class TestConverseSweep:
    def test_bound_holds_everywhere(self, rows):
        assert all(r.holds for r in rows)

    def test_decay(self, rows):
        assert rows[199].sigma_d < 0.5 * rows[19].sigma_d

    def test_channel_dimension(self, rows):
        assert rows[19].d == 41 and rows[199].d == 15672867944704736
        assert channel_dimension(H_09, 0.1, 20, qubit_counting=True) == 32

    def test_csv_roundtrip(self, rows):
        text = sweep_csv(rows[:3])
        lines = text.strip().split("\n")
        assert lines[0].split(",")[0] == "N" and len(lines) == 4
        assert float(lines[3].split(",")[5]) == rows[2].sigma_d

    def test_uniform_example(self):
        for r in converse_sweep([0.5, 0.5], 0.1, range(1, 30)):
            assert abs(r.sigma_d - r.d * 2.0**-r.N) < 1e-15
            assert r.sigma_d <= 2.0 ** (-0.2 * r.N) + 1e-15


def test_block_ensemble():
    base = SourceEnsemble(np.array([0.9, 0.1]), np.eye(2))
    blk = block_ensemble(base, 3)
    assert len(blk) == 8 and blk.n == 8
    assert np.allclose(ensemble_density(blk), np.diag(np.kron(np.kron([.9, .1], [.9, .1]), [.9, .1])))
    with pytest.raises(ContractError):
        block_ensemble(base, 13)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_dense_eta_matches_sigma_d(N):
    base = SourceEnsemble(np.array([0.9, 0.1]), np.eye(2))
    rho = ensemble_density(block_ensemble(base, N))
    ps = product_spectrum([0.9, 0.1], N)
    for d in range(1, 2**N + 1):
        assert abs(eta(rho, d) - sigma_d(ps, d)) < 1e-9
