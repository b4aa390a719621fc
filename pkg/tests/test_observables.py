"""Particle number, energy, monitored inequalities, diagnostics records."""

import numpy as np
import pytest

from hfbflow import (
    HfbState,
    coherent_state,
    energy,
    evolve,
    gamma_floor,
    gauge_transform,
    particle_number,
    record,
    sigma_bound_slack,
    write_diagnostics_csv,
)
from hfbflow.meanfield import _kinetic_kernel
from hfbflow.observables import (
    DiagnosticsRecord,
    format_float,
    read_diagnostics_csv,
    sigma_bound_parts,
)
from hfbflow.oracle import random_state
from hfbflow.state import squeezed_thermal_state

RNG = np.random.default_rng(31)


def _vacuum(grid):
    return coherent_state(grid, np.zeros(grid.n_nodes, dtype=complex))


class TestParticleNumber:
    def test_vacuum(self, grid8):
        assert particle_number(_vacuum(grid8)) == 0.0

    def test_coherent_norm(self, grid8):
        phi = np.full(grid8.n_nodes, np.sqrt(2.5 / (grid8.weight * grid8.n_nodes)), dtype=complex)
        assert particle_number(coherent_state(grid8, phi)) == pytest.approx(2.5, rel=1e-14)

    def test_diagonal_occupations(self, grid8):
        N = grid8.n_nodes
        occ = np.arange(1.0, N + 1.0)
        occ *= 3.0 / (grid8.weight * occ.sum())
        st = HfbState(grid8, np.zeros(N), np.diag(occ), np.zeros((N, N)))
        assert particle_number(st) == pytest.approx(3.0, rel=1e-14)


class TestEnergy:
    def test_vacuum(self, model8):
        grid, V, vk = model8
        assert energy(_vacuum(grid), grid, V, vk) == 0.0

    def test_coherent_plane_wave_kinetic(self, grid16):
        N = grid16.n_nodes
        V = np.zeros(N)
        vzero = np.zeros((N, N))
        k_mode = 2
        phi = np.exp(1j * k_mode * grid16.coordinates[:, 0]) / np.sqrt(grid16.L)
        phi *= np.sqrt(2.5)
        st = coherent_state(grid16, phi)
        k = 2 * np.pi * k_mode / grid16.L
        assert energy(st, grid16, V, vzero) == pytest.approx(k**2 * 2.5, rel=1e-12)

    def test_matches_dense_quadrature_oracle(self, model16):
        grid, V, vk = model16
        st = random_state(grid, seed=21)
        w = grid.weight
        N = grid.n_nodes
        phi, gam, sig = st.phi, st.gamma, st.sigma
        h0 = _kinetic_kernel(grid) + np.diag(V) / w
        P = np.outer(phi, phi.conj())
        gph = gam + P

        def b_entry(alpha, i, l):
            # kernel of the interaction shift: exchange plus (diagonal) direct field / w
            out = vk[i, l] * alpha[i, l]
            if i == l:
                out += sum(vk[i, j] * alpha[j, j] for j in range(N))
            return out

        expected = 0.0 + 0.0j
        for i in range(N):
            for l in range(N):
                expected += w * w * h0[i, l] * gph[l, i]
                expected += w * w * b_entry(P, i, l) * gam[l, i]
                expected += 0.5 * w * w * b_entry(gam, i, l) * gam[l, i]
        for i in range(N):
            for j in range(N):
                expected += 0.5 * w * w * vk[i, j] * abs(sig[i, j] + phi[i] * phi[j]) ** 2
        assert energy(st, grid, V, vk) == pytest.approx(expected.real, rel=1e-10)
        assert abs(expected.imag) < 1e-10

    def test_gauge_invariance_exact(self, model16):
        grid, V, vk = model16
        st = random_state(grid, seed=22)
        e0 = energy(st, grid, V, vk)
        n0 = particle_number(st)
        for theta in (0.3, 1.7, np.pi):
            rotated = gauge_transform(st, theta)
            assert energy(rotated, grid, V, vk) == pytest.approx(e0, abs=1e-12 * (1 + abs(e0)))
            assert particle_number(rotated) == pytest.approx(n0, rel=1e-12)

    def test_broken_hermiticity_detected(self, model8):
        grid, V, vk = model8
        N = grid.n_nodes
        gam = np.zeros((N, N), dtype=complex)
        gam[0, 1] = 5.0  # grossly non-Hermitian
        st = HfbState(grid, np.ones(N, dtype=complex), gam, np.zeros((N, N)))
        with pytest.raises(ValueError, match="imaginary"):
            energy(st, grid, V, vk)


class TestSigmaBound:
    def test_vacuum_zero(self, grid8):
        assert sigma_bound_slack(_vacuum(grid8)) == 0.0

    def test_zero_sigma_positive_slack(self, grid8):
        N = grid8.n_nodes
        st = HfbState(grid8, np.zeros(N), 0.2 * np.eye(N), np.zeros((N, N)))
        lhs, rhs = sigma_bound_parts(st)
        assert lhs == 0.0
        assert sigma_bound_slack(st) == pytest.approx(rhs)
        assert rhs > 0

    def test_admissible_ensemble_nonnegative(self, grid16):
        for seed in range(20):
            st = random_state(grid16, seed=seed)
            _, rhs = sigma_bound_parts(st)
            assert sigma_bound_slack(st) >= -1e-8 * rhs

    def test_single_mode_squeezed_saturates_sum_of_squares(self, grid8):
        # the k = 0 squeezed mode gives equality in the sum-of-squares form
        # and strictly violates the (a+b)^2 variant, fixing the convention
        r = 0.8
        u = np.ones(grid8.n_nodes) / np.sqrt(grid8.n_nodes * grid8.weight)
        gamma = np.sinh(r) ** 2 * np.outer(u, u.conj())
        sigma = np.sinh(r) * np.cosh(r) * np.outer(u, u)
        st = HfbState(grid8, np.zeros(grid8.n_nodes), gamma, sigma)
        assert gamma_floor(st) >= -1e-12
        lhs, rhs = sigma_bound_parts(st)
        assert abs(rhs - lhs) < 1e-10 * rhs
        lhs_sum_form = 2.0 * lhs  # (a+b)^2 = 4 a^2 when both halves coincide
        assert rhs - lhs_sum_form < -0.1 * rhs


class TestGammaFloor:
    def test_vacuum(self, grid8):
        assert gamma_floor(_vacuum(grid8)) == pytest.approx(0.0, abs=1e-15)

    def test_diagonal_gamma(self, grid8):
        N = grid8.n_nodes
        st = HfbState(grid8, np.zeros(N), 0.5 * np.eye(N), np.zeros((N, N)))
        assert gamma_floor(st) == pytest.approx(0.5, rel=1e-12)

    def test_oversized_sigma_goes_negative(self, grid8):
        N = grid8.n_nodes
        u = np.ones(N) / np.sqrt(N * grid8.weight)
        s = np.sinh(0.7) ** 2
        gamma = s * np.outer(u, u.conj())
        sigma_ok = np.sqrt(s * (s + 1)) * np.outer(u, u)
        st_ok = HfbState(grid8, np.zeros(N), gamma, sigma_ok)
        assert gamma_floor(st_ok) >= -1e-12
        st_bad = HfbState(grid8, np.zeros(N), gamma, 1.2 * sigma_ok)
        assert gamma_floor(st_bad) < -1e-3


class TestRecord:
    def test_vacuum_all_zero(self, model8):
        grid, V, vk = model8
        rec = record(_vacuum(grid), 0.0, grid, V, vk)
        assert all(value == 0.0 for value in rec.row())

    def test_determinism_and_consistency(self, model16):
        grid, V, vk = model16
        st = random_state(grid, seed=25)
        r1 = record(st, 0.5, grid, V, vk)
        r2 = record(st, 0.5, grid, V, vk)
        assert r1.row() == r2.row()
        assert r1.n_total == pytest.approx(particle_number(st), rel=1e-14)
        assert r1.energy == pytest.approx(energy(st, grid, V, vk), rel=1e-14)
        assert r1.gamma_floor == pytest.approx(gamma_floor(st), rel=1e-12)
        assert r1.sigma_slack == pytest.approx(sigma_bound_slack(st), rel=1e-12)

    def test_only_the_total_number_is_conserved(self, model16):
        grid, V, vk = model16
        profile = np.full(grid.n_nodes, 1.0 + 0.0j)
        phi = profile * np.sqrt(2.0 / (grid.weight * np.vdot(profile, profile).real))
        st = coherent_state(grid, phi)
        traj = evolve(st, grid, V, vk, T=0.5, dt=1e-3, stride=500)
        first = record(traj.states[0], 0.0, grid, V, vk)
        last = record(traj.final, 0.5, grid, V, vk)
        assert first.n_gamma == 0.0
        assert last.n_gamma > 1e-6  # pair creation moved particles into gamma
        assert abs(last.n_total - first.n_total) / first.n_total < 1e-8


class TestCsv:
    def test_roundtrip(self, model8, tmp_path):
        grid, V, vk = model8
        st = random_state(grid, seed=26)
        recs = [record(st, t, grid, V, vk) for t in (0.0, 0.125)]
        path = tmp_path / "diagnostics.csv"
        write_diagnostics_csv(recs, path)
        data = read_diagnostics_csv(path)
        assert list(data) == list(DiagnosticsRecord.columns())
        assert data["t"] == pytest.approx([0.0, 0.125])
        assert data["energy"][0] == recs[0].energy  # 17 digits round-trip losslessly

    @pytest.mark.parametrize("value", [0.1, 1.0 / 3.0, 2.0 * np.pi, -1e-300, 123456.789])
    def test_format_is_lossless(self, value):
        assert float(format_float(value)) == value
