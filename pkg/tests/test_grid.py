"""Grid construction, spectral operators, field sampling, pair kernels."""

import numpy as np
import pytest

from hfbflow import (
    MultiplierOperator,
    apply_multiplier,
    laplacian,
    make_grid,
    pair_kernel,
    sample_field,
    sobolev_weight,
)

RNG = np.random.default_rng(42)


class TestMakeGrid:
    def test_1d_basics(self):
        g = make_grid(1, 2 * np.pi, 8)
        assert g.spacing == pytest.approx(np.pi / 4)
        assert g.weight == pytest.approx(np.pi / 4)
        modes = sorted(g.axis_frequencies * g.L / (2 * np.pi))
        assert modes == pytest.approx([-3, -2, -1, 0, 1, 2, 3, 4])

    def test_2d_nodes_and_weight(self):
        g = make_grid(2, 1.0, 4)
        assert g.n_nodes == 16
        assert g.weight == pytest.approx(1.0 / 16.0)

    @pytest.mark.parametrize(
        "args",
        [(1, 2 * np.pi, 6), (1, 2 * np.pi, 2), (4, 1.0, 8), (0, 1.0, 8), (1, -1.0, 8)],
    )
    def test_rejects_bad_parameters(self, args):
        with pytest.raises(ValueError):
            make_grid(*args)

    def test_frequency_lattice_negation_closure(self):
        g = make_grid(1, 5.0, 16)
        m = np.round(g.axis_frequencies * g.L / (2 * np.pi)).astype(int)
        without_nyquist = set(m) - {g.n // 2}
        assert {-x for x in without_nyquist} == without_nyquist


class TestMultiplier:
    def test_laplacian_on_constant(self, grid16):
        f = np.ones(grid16.n_nodes, dtype=complex)
        out = apply_multiplier(laplacian(grid16), f)
        assert np.abs(out).max() < 1e-14

    @pytest.mark.parametrize("mode", [1, 3, -5])
    def test_laplacian_plane_wave_eigenfunction(self, grid16, mode):
        f = sample_field(grid16, {"kind": "plane_wave", "mode": mode})
        k = 2 * np.pi * mode / grid16.L
        out = apply_multiplier(laplacian(grid16), f)
        assert np.abs(out + k**2 * f).max() < 1e-12

    def test_sobolev_weight_plane_wave(self, grid16):
        f = sample_field(grid16, {"kind": "plane_wave", "mode": 2})
        k = 2 * np.pi * 2 / grid16.L
        out = sobolev_weight(grid16).apply(f)
        assert np.abs(out - np.sqrt(1 + k**2) * f).max() < 1e-12

    def test_unit_symbol_is_identity(self, grid16):
        op = MultiplierOperator(grid16, np.ones(grid16.n_nodes))
        f = RNG.standard_normal(grid16.n_nodes) + 1j * RNG.standard_normal(grid16.n_nodes)
        assert np.abs(op.apply(f) - f).max() < 1e-14

    def test_composition_is_symbol_product(self, grid16):
        s1 = 1.0 + grid16.k_squared.ravel()
        s2 = np.cos(grid16.k_squared.ravel())
        f = RNG.standard_normal(grid16.n_nodes) + 1j * RNG.standard_normal(grid16.n_nodes)
        twice = MultiplierOperator(grid16, s2).apply(MultiplierOperator(grid16, s1).apply(f))
        product = MultiplierOperator(grid16, s1 * s2).apply(f)
        assert np.abs(twice - product).max() < 1e-11

    def test_self_adjoint_for_real_symbol(self, grid16):
        op = sobolev_weight(grid16, 2)
        f = RNG.standard_normal(grid16.n_nodes) + 1j * RNG.standard_normal(grid16.n_nodes)
        g = RNG.standard_normal(grid16.n_nodes) + 1j * RNG.standard_normal(grid16.n_nodes)
        lhs = grid16.inner(f, op.apply(g))
        rhs = grid16.inner(op.apply(f), g)
        assert abs(lhs - rhs) < 1e-11 * max(1.0, abs(lhs))

    def test_kernel_convention_matches_apply(self, grid8):
        op = laplacian(grid8)
        f = RNG.standard_normal(grid8.n_nodes) + 1j * RNG.standard_normal(grid8.n_nodes)
        via_kernel = grid8.kapply(op.to_kernel(), f)
        assert np.abs(via_kernel - op.apply(f)).max() < 1e-11

    def test_parseval(self, grid16):
        f = RNG.standard_normal(grid16.n_nodes) + 1j * RNG.standard_normal(grid16.n_nodes)
        fhat = np.fft.fftn(f.reshape(grid16.shape))
        physical = grid16.weight * np.sum(np.abs(f) ** 2)
        spectral = grid16.weight / grid16.n_nodes * np.sum(np.abs(fhat) ** 2)
        assert physical == pytest.approx(spectral, rel=1e-12)

    def test_size_mismatch_rejected(self, grid16):
        with pytest.raises(ValueError):
            laplacian(grid16).apply(np.zeros(3))


class TestSampleField:
    def test_constant_zero(self, grid8):
        assert np.all(sample_field(grid8, {"kind": "constant", "value": 0}) == 0)

    def test_cosine_exact_samples(self):
        g = make_grid(1, 2 * np.pi, 8)
        f = sample_field(g, {"kind": "cosine", "mode": 1})
        x = g.axis_coordinates
        assert f == pytest.approx(np.cos(x), abs=1e-15)

    def test_cosine_offset(self):
        g = make_grid(1, 2 * np.pi, 8)
        f = sample_field(g, {"kind": "cosine", "mode": 2, "amplitude": 0.5, "offset": 1.0})
        assert f == pytest.approx(1.0 + 0.5 * np.cos(2 * g.axis_coordinates), abs=1e-15)

    def test_periodized_gaussian_matches_image_sum(self, grid16):
        width = 0.4
        f = sample_field(grid16, {"kind": "gaussian", "width": width, "amplitude": 2.0})
        x = grid16.coordinates[:, 0]
        direct = np.zeros_like(x)
        for nu in range(-6, 7):
            direct += np.exp(-((x - nu * grid16.L) ** 2) / (2 * width**2))
        assert f == pytest.approx(2.0 * direct, rel=1e-12)

    def test_periodized_gaussian_2d(self):
        g = make_grid(2, 4.0, 8)
        width = 0.5
        f = sample_field(g, {"kind": "gaussian", "width": width, "center": [1.0, 2.0]})
        X = g.coordinates
        direct = np.zeros(g.n_nodes)
        for nx in range(-4, 5):
            for ny in range(-4, 5):
                d = X - np.array([1.0 + nx * g.L, 2.0 + ny * g.L])
                direct += np.exp(-np.sum(d**2, axis=1) / (2 * width**2))
        assert f == pytest.approx(direct, rel=1e-12)

    def test_unknown_kind(self, grid8):
        with pytest.raises(ValueError, match="unknown field spec"):
            sample_field(grid8, {"kind": "sawtooth"})

    def test_table_roundtrip_and_size_check(self, grid8):
        values = RNG.standard_normal(grid8.n_nodes)
        assert np.array_equal(sample_field(grid8, {"kind": "table", "values": values}), values)
        with pytest.raises(ValueError):
            sample_field(grid8, {"kind": "table", "values": values[:-1]})


class TestPairKernel:
    def test_zero_and_constant(self, grid8):
        assert np.all(pair_kernel(grid8, {"kind": "constant", "value": 0.0}) == 0)
        vk = pair_kernel(grid8, {"kind": "constant", "value": 0.7})
        assert np.all(vk == 0.7)

    def test_gaussian_symmetric_circulant(self, grid8):
        vk = pair_kernel(grid8, {"kind": "gaussian", "amplitude": 0.5, "width": 0.3})
        assert np.abs(vk - vk.T).max() < 1e-14
        sampled = sample_field(grid8, {"kind": "gaussian", "amplitude": 0.5, "width": 0.3})
        assert vk[0] == pytest.approx(sampled, rel=1e-14)
        # entry depends only on the index difference mod n
        n = grid8.n
        for i in range(n):
            for j in range(n):
                assert vk[i, j] == pytest.approx(vk[0, (j - i) % n], abs=1e-15)

    def test_odd_potential_rejected(self, grid8):
        x = grid8.coordinates[:, 0]
        with pytest.raises(ValueError, match="even"):
            pair_kernel(grid8, {"kind": "table", "values": np.sin(2 * np.pi * x / grid8.L)})

    def test_complex_potential_rejected(self, grid8):
        with pytest.raises(ValueError, match="real"):
            pair_kernel(grid8, {"kind": "plane_wave", "mode": 1})
