"""Assembly of the nonlinear one-body operators driving the dynamics.

The effective one-body Hamiltonian is ``h(gamma) = -Delta + V + v*d(gamma)
+ v # gamma`` (direct convolution plus exchange), and the pairing field is
``k(sigma) = v # sigma``, where ``(v # a)(x, y) = v(x - y) a(x, y)`` is the
pointwise product of a kernel with the pair potential.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import MultiplierOperator, TorusGrid, laplacian
from .state import HfbState


@lru_cache(maxsize=8)
def _kinetic_kernel(grid: TorusGrid) -> np.ndarray:
    """Kernel of ``-Delta`` (cached; grids are immutable)."""
    mat = -laplacian(grid).operator_matrix()
    mat = np.ascontiguousarray(mat.real) / grid.weight
    mat.flags.writeable = False
    return mat


def density(gamma: np.ndarray) -> np.ndarray:
    """Diagonal of a kernel, ``d(gamma)(x) = gamma(x, x)``, as a real field."""
    diag = np.ascontiguousarray(np.diagonal(gamma))
    dust = np.abs(diag.imag).max() if diag.size else 0.0
    if dust > 1e-8 * max(1.0, np.abs(diag.real).max()):
        raise ValueError(f"kernel diagonal has imaginary part {dust:.3e}; state is corrupted")
    return diag.real.copy()


def direct_potential(grid: TorusGrid, v_kernel: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Convolution ``(v * d(gamma))(x_i) = w * sum_j v(x_i - x_j) gamma[j, j]``.

    Evaluated spectrally through the circulant structure of ``v_kernel``.
    """
    dens = density(gamma).reshape(grid.shape)
    v_row = v_kernel[0].reshape(grid.shape)  # v_per(-x_j) = v_per(x_j)
    conv = np.fft.ifftn(np.fft.fftn(v_row) * np.fft.fftn(dens)).real
    return grid.weight * conv.ravel()


def exchange(v_kernel: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Pointwise product ``v(x - y) alpha(x, y)``."""
    return v_kernel * alpha


def pairing_k(v_kernel: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Pairing field ``k(sigma) = v # sigma``."""
    return v_kernel * sigma


def mean_field_shift(grid: TorusGrid, v_kernel: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Interaction part ``b[alpha] = v*d(alpha) + v # alpha`` as a kernel."""
    direct = direct_potential(grid, v_kernel, alpha)
    out = exchange(v_kernel, alpha)
    idx = np.arange(grid.n_nodes)
    out[idx, idx] += direct / grid.weight
    return out


def _mean_field_shift_lax(grid: TorusGrid, v_kernel: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """``b[alpha]`` keeping a complex diagonal.

    Fixed-point iterates of the integral form of the dynamics stray off the
    Hermitian manifold, where the density is legitimately complex; the
    polynomial map must then be evaluated without the realness check.
    """
    dens = np.ascontiguousarray(np.diagonal(alpha)).reshape(grid.shape)
    v_row = v_kernel[0].reshape(grid.shape)
    conv = np.fft.ifftn(np.fft.fftn(v_row) * np.fft.fftn(dens))
    out = v_kernel * alpha
    idx = np.arange(grid.n_nodes)
    out[idx, idx] += conv.ravel()  # direct field over w: the two weights cancel
    return out


def mean_field_h(
    grid: TorusGrid, V_field: np.ndarray, v_kernel: np.ndarray, gamma: np.ndarray
) -> np.ndarray:
    """Effective one-body kernel ``-Delta + V + v*d(gamma) + v # gamma``."""
    out = mean_field_shift(grid, v_kernel, gamma)
    idx = np.arange(grid.n_nodes)
    out[idx, idx] += np.asarray(V_field).ravel() / grid.weight
    return out + _kinetic_kernel(grid)


def generator_block(grid: TorusGrid, h_eff: np.ndarray, k_eff: np.ndarray) -> np.ndarray:
    """Operator matrix ``[[H, K], [-conj(K), -conj(H)]]`` of the quadratic generator.

    ``J @ block @ J`` equals ``block^dagger`` for ``J = diag(I, -I)``;
    equivalently ``J @ block`` is Hermitian.
    """
    H = grid.weight * h_eff
    K = grid.weight * k_eff
    return np.block([[H, K], [-K.conj(), -H.conj()]])


@dataclass(frozen=True)
class HfbGenerator:
    """Coefficients of the quadratic generator at a given state.

    ``h_eff`` is the mean-field kernel evaluated at ``gamma + |phi><phi|``
    and ``k_eff`` the pairing kernel at ``sigma + phi (x) phi``.
    """

    grid: TorusGrid
    h_eff: np.ndarray
    k_eff: np.ndarray

    @property
    def block(self) -> np.ndarray:
        return generator_block(self.grid, self.h_eff, self.k_eff)


def hfb_generator(
    state: HfbState, grid: TorusGrid, V_field: np.ndarray, v_kernel: np.ndarray
) -> HfbGenerator:
    h_eff = mean_field_h(grid, V_field, v_kernel, state.gamma_with_condensate())
    k_eff = pairing_k(v_kernel, state.sigma_with_condensate())
    return HfbGenerator(grid, h_eff, k_eff)


def k_estimate_ratio(
    grid: TorusGrid,
    v_kernel: np.ndarray,
    sigma: np.ndarray,
    weight: MultiplierOperator,
) -> float:
    """Ratio ``||M k(sigma)||_HS / (||M sigma||_HS + ||sigma M||_HS)``.

    For smooth pair potentials this stays bounded as the grid is refined.
    """
    S = grid.weight * np.asarray(sigma)
    if not np.any(S):
        raise ValueError("sigma must be nonzero")
    Mop = weight.operator_matrix()
    K = v_kernel * S
    num = np.linalg.norm(Mop @ K, "fro")
    den = np.linalg.norm(Mop @ S, "fro") + np.linalg.norm(S @ Mop, "fro")
    return float(num / den)
