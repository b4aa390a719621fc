"""State constructors, admissibility checks, norms, gauge action, snapshots."""

import numpy as np
import pytest

from hfbflow import (
    HfbState,
    coherent_state,
    gauge_transform,
    generalized_density_matrix,
    load_snapshot,
    sample_field,
    save_snapshot,
    sobolev_weight,
    squeezed_thermal_state,
    state_distance,
    validate,
    xj_norm,
)
from hfbflow.meanfield import _kinetic_kernel
from hfbflow.oracle import random_state

RNG = np.random.default_rng(7)


def _vacuum(grid):
    return coherent_state(grid, np.zeros(grid.n_nodes, dtype=complex))


class TestValidate:
    def test_vacuum_is_valid(self, grid8):
        rep = validate(_vacuum(grid8), tol=0.0 + 1e-300)
        assert rep.ok
        assert rep.gamma_min_eig == pytest.approx(0.0, abs=1e-15)
        assert rep.generalized_min_eig == pytest.approx(0.0, abs=1e-15)
        # the complementary block contributes eigenvalues 1/w
        eigs = np.linalg.eigvalsh(generalized_density_matrix(_vacuum(grid8)))
        assert eigs.max() == pytest.approx(1.0 / grid8.weight, rel=1e-12)

    def test_unit_diagonal_gamma_valid(self, grid8):
        N = grid8.n_nodes
        st = HfbState(grid8, np.zeros(N), np.eye(N), np.zeros((N, N)))
        assert validate(st).ok

    def test_sigma_asymmetry_flagged(self, grid8):
        N = grid8.n_nodes
        sigma = np.zeros((N, N), dtype=complex)
        sigma[0, 1] = 0.3
        st = HfbState(grid8, np.zeros(N), np.zeros((N, N)), sigma)
        rep = validate(st, tol=1e-10)
        assert not rep.ok
        assert any("sigma" in v for v in rep.violations)
        assert rep.sigma_symmetry_defect == pytest.approx(0.3)

    def test_constructor_outputs_validate(self, grid16):
        for seed in range(5):
            assert validate(random_state(grid16, seed=seed), tol=1e-10).ok

    def test_offdiagonal_perturbation_bound(self, grid8):
        # min eig Gamma >= min eig of the block-diagonal part - |sigma|_op
        for seed in range(5):
            st = random_state(grid8, seed=seed)
            big = generalized_density_matrix(st)
            floor = np.linalg.eigvalsh(0.5 * (big + big.conj().T)).min()
            diag_part = np.linalg.eigvalsh(
                0.5 * (st.gamma + st.gamma.conj().T)
            ).min()
            other = np.linalg.eigvalsh(
                np.eye(st.grid.n_nodes) / st.grid.weight
                + 0.5 * (st.gamma + st.gamma.conj().T).conj()
            ).min()
            bound = min(diag_part, other) - np.linalg.svd(st.sigma, compute_uv=False).max()
            assert floor >= bound - 1e-12


class TestCoherent:
    def test_vacuum(self, grid8):
        st = _vacuum(grid8)
        assert np.all(st.gamma == 0) and np.all(st.sigma == 0)

    def test_plane_wave_number(self, grid8):
        phi = np.exp(1j * grid8.coordinates[:, 0])
        st = coherent_state(grid8, phi)
        n = grid8.weight * np.vdot(st.phi, st.phi).real
        assert n == pytest.approx(grid8.L, rel=1e-13)

    def test_random_phi_keeps_positivity(self, grid8):
        phi = RNG.standard_normal(grid8.n_nodes) + 1j * RNG.standard_normal(grid8.n_nodes)
        st = coherent_state(grid8, phi)
        big = generalized_density_matrix(st)
        assert np.linalg.eigvalsh(0.5 * (big + big.conj().T)).min() >= -1e-12

    def test_size_mismatch(self, grid8):
        with pytest.raises(ValueError):
            coherent_state(grid8, np.zeros(5))


class TestSqueezedThermal:
    def test_zero_squeeze_cold_limit_is_vacuum(self, grid8):
        h = _kinetic_kernel(grid8)
        st = squeezed_thermal_state(grid8, h, beta=600.0, squeeze=0.0, mu=-1.0)
        assert grid8.ktrace(st.gamma).real == pytest.approx(0.0, abs=1e-12)
        assert np.abs(st.sigma).max() < 1e-12

    def test_mode_occupations_closed_form(self, grid8):
        # diagonal kernel: modes are coordinate directions with energies eps/w
        N = grid8.n_nodes
        eps = np.linspace(1.0, 2.4, N)
        h = np.diag(eps) / grid8.weight
        beta = 1.3
        st = squeezed_thermal_state(grid8, h, beta=beta, squeeze=0.0)
        occ = np.sort(np.linalg.eigvalsh(grid8.weight * st.gamma))
        expected = np.sort(1.0 / np.expm1(beta * eps))
        assert occ == pytest.approx(expected, rel=1e-12)

    def test_squeezing_preserves_positivity(self, grid16):
        h = _kinetic_kernel(grid16)
        r = 0.8 * np.exp(-np.arange(grid16.n_nodes) / 6.0)
        phases = RNG.uniform(0, 2 * np.pi, grid16.n_nodes)
        st = squeezed_thermal_state(grid16, h, beta=1.0, squeeze=r, phases=phases, mu=-1.0)
        rep = validate(st, tol=1e-10)
        assert rep.ok
        assert rep.generalized_min_eig >= -1e-10
        assert np.abs(st.sigma).max() > 1e-3  # squeezing produced pairing

    def test_rejects_bad_inputs(self, grid8):
        N = grid8.n_nodes
        h = _kinetic_kernel(grid8)
        with pytest.raises(ValueError, match="beta"):
            squeezed_thermal_state(grid8, h, beta=-1.0, squeeze=0.0, mu=-1.0)
        with pytest.raises(ValueError, match="positive"):
            squeezed_thermal_state(grid8, h, beta=1.0, squeeze=0.0, mu=0.0)  # zero mode
        skew = np.zeros((N, N), dtype=complex)
        skew[0, 1] = 1.0
        with pytest.raises(ValueError, match="Hermitian"):
            squeezed_thermal_state(grid8, h + skew, beta=1.0, squeeze=0.0, mu=-1.0)


class TestXjNorm:
    def test_vacuum_is_zero(self, grid8):
        for j in range(4):
            assert xj_norm(_vacuum(grid8), j).value == 0.0

    def test_plane_wave_first_order(self, grid16):
        k_mode = 3
        phi = np.exp(1j * k_mode * grid16.coordinates[:, 0]) / np.sqrt(grid16.L)
        st = coherent_state(grid16, phi)
        assert xj_norm(st, 0).value == pytest.approx(1.0, rel=1e-12)
        k = 2 * np.pi * k_mode / grid16.L
        assert xj_norm(st, 1).value == pytest.approx(np.sqrt(1 + k**2), rel=1e-12)

    def test_rank_one_gamma_trace_term(self, grid16):
        u = sample_field(grid16, {"kind": "gaussian", "width": 0.7}).astype(complex)
        gamma = np.outer(u, u.conj())
        st = HfbState(grid16, np.zeros(grid16.n_nodes), gamma, np.zeros_like(gamma))
        m1 = sobolev_weight(grid16, 1)
        expected = grid16.weight * np.vdot(m1.apply(u), m1.apply(u)).real
        assert xj_norm(st, 1).value == pytest.approx(expected, rel=1e-11)

    def test_monotone_in_order(self, grid16):
        st = random_state(grid16, seed=5)
        values = [xj_norm(st, j).value for j in range(4)]
        assert values[0] <= values[1] <= values[2] <= values[3]

    def test_rejects_bad_order(self, grid8):
        with pytest.raises(ValueError):
            xj_norm(_vacuum(grid8), 4)


class TestGauge:
    def test_identity_and_half_turns(self, grid8):
        st = random_state(grid8, seed=1)
        same = gauge_transform(st, 0.0)
        assert np.array_equal(same.phi, st.phi)
        flipped = gauge_transform(st, np.pi)
        assert np.allclose(flipped.phi, -st.phi, atol=1e-15)
        assert np.allclose(flipped.sigma, st.sigma, atol=1e-15)
        quarter = gauge_transform(st, np.pi / 2)
        assert np.allclose(quarter.phi, 1j * st.phi, atol=1e-15)
        assert np.allclose(quarter.sigma, -st.sigma, atol=1e-15)
        assert np.array_equal(quarter.gamma, st.gamma)

    def test_composition(self, grid8):
        st = random_state(grid8, seed=2)
        a, b = 0.37, 1.41
        once = gauge_transform(gauge_transform(st, a), b)
        direct = gauge_transform(st, a + b)
        assert state_distance(once, direct) < 1e-13


class TestSnapshot:
    def test_bit_exact_roundtrip(self, grid16, tmp_path):
        st = random_state(grid16, seed=9)
        path = tmp_path / "state.hfb"
        save_snapshot(st, path)
        back = load_snapshot(path)
        assert back.grid == st.grid
        assert back.phi.tobytes() == st.phi.tobytes()
        assert back.gamma.tobytes() == st.gamma.tobytes()
        assert back.sigma.tobytes() == st.sigma.tobytes()

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bogus.hfb"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(ValueError, match="not a snapshot"):
            load_snapshot(path)

    def test_rejects_truncation(self, grid8, tmp_path):
        st = random_state(grid8, seed=3)
        path = tmp_path / "state.hfb"
        save_snapshot(st, path)
        path.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(ValueError, match="truncated"):
            load_snapshot(path)
