"""States of the condensate + fluctuation model and their admissibility checks.

A state is the triple ``(phi, gamma, sigma)``: the condensate field, the
one-particle density matrix kernel (Hermitian, positive) and the pairing
kernel (symmetric).  Admissibility is positivity of the generalized density
matrix ``Gamma = [[gamma, sigma], [conj(sigma), I/w + conj(gamma)]]``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .grid import TorusGrid, sobolev_weight

SNAPSHOT_MAGIC = b"HFB1"


def _frozen_array(a, shape) -> np.ndarray:
    out = np.array(a, dtype=np.complex128, order="C")
    if out.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {out.shape}")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class HfbState:
    """Immutable triple ``(phi, gamma, sigma)`` on a grid.

    ``gamma`` and ``sigma`` are stored as kernel matrices (see the kernel
    convention in :mod:`hfbflow.grid`).
    """

    grid: TorusGrid
    phi: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        N = self.grid.n_nodes
        object.__setattr__(self, "phi", _frozen_array(self.phi, (N,)))
        object.__setattr__(self, "gamma", _frozen_array(self.gamma, (N, N)))
        object.__setattr__(self, "sigma", _frozen_array(self.sigma, (N, N)))

    def gamma_with_condensate(self) -> np.ndarray:
        """Kernel of ``gamma + |phi><phi|``."""
        return self.gamma + np.outer(self.phi, self.phi.conj())

    def sigma_with_condensate(self) -> np.ndarray:
        """Kernel of ``sigma + phi (x) phi``."""
        return self.sigma + np.outer(self.phi, self.phi)


def coherent_state(grid: TorusGrid, phi: np.ndarray) -> HfbState:
    """Pure-condensate state: ``gamma = sigma = 0``."""
    phi = np.asarray(phi, dtype=np.complex128).ravel()
    if phi.size != grid.n_nodes:
        raise ValueError(f"phi has {phi.size} entries, expected {grid.n_nodes}")
    N = grid.n_nodes
    return HfbState(grid, phi, np.zeros((N, N)), np.zeros((N, N)))


def generalized_density_matrix(state: HfbState) -> np.ndarray:
    """The ``2N x 2N`` kernel ``[[gamma, sigma], [conj(sigma), I/w + conj(gamma)]]``."""
    N = state.grid.n_nodes
    eye = np.eye(N) / state.grid.weight
    return np.block(
        [
            [state.gamma, state.sigma],
            [state.sigma.conj(), eye + state.gamma.conj()],
        ]
    )


@dataclass(frozen=True)
class ValidityReport:
    """Measured structural defects of a state and the verdict at tolerance ``tol``."""

    gamma_hermiticity_defect: float
    sigma_symmetry_defect: float
    gamma_min_eig: float
    generalized_min_eig: float
    tol: float
    violations: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(state: HfbState, tol: float = 1e-10) -> ValidityReport:
    """Check Hermiticity of gamma, symmetry of sigma, and both positivity floors.

    The state is valid iff the symmetry defects are below ``tol`` and the
    smallest eigenvalues of gamma and of the generalized density matrix are
    above ``-tol``.
    """
    herm = float(np.abs(state.gamma - state.gamma.conj().T).max())
    sym = float(np.abs(state.sigma - state.sigma.T).max())
    gmin = float(
        np.linalg.eigvalsh(0.5 * (state.gamma + state.gamma.conj().T)).min()
    )
    big = generalized_density_matrix(state)
    bmin = float(np.linalg.eigvalsh(0.5 * (big + big.conj().T)).min())
    if not (
        np.isfinite(state.phi).all()
        and np.isfinite(state.gamma).all()
        and np.isfinite(state.sigma).all()
    ):
        violations = ["non-finite entries"]
    else:
        violations = []
        if herm >= tol:
            violations.append(f"gamma not Hermitian (defect {herm:.3e})")
        if sym >= tol:
            violations.append(f"sigma not symmetric (defect {sym:.3e})")
        if gmin <= -tol:
            violations.append(f"gamma not positive (min eig {gmin:.3e})")
        if bmin <= -tol:
            violations.append(f"generalized density matrix not positive (min eig {bmin:.3e})")
    return ValidityReport(herm, sym, gmin, bmin, tol, tuple(violations))


def squeezed_thermal_state(
    grid: TorusGrid,
    h: np.ndarray,
    beta: float,
    squeeze,
    phases=None,
    mu: float = 0.0,
) -> HfbState:
    """Thermal occupation of a one-body kernel ``h`` rotated by mode squeezing.

    The thermal density ``(exp(beta*(h - mu)) - 1)^{-1}`` (an admissible
    state with no pairing) is conjugated by a symplectic map built from
    per-mode squeeze amplitudes ``r`` and phases, in the eigenbasis of ``h``.
    The result always satisfies the generalized positivity condition.

    Parameters
    ----------
    h : ndarray
        Hermitian one-body kernel; its spectrum shifted by ``mu`` must be
        strictly positive.
    beta : float
        Inverse temperature, ``beta > 0``.
    squeeze : float or ndarray
        Squeeze amplitude per mode (modes ordered by ascending energy);
        a scalar is broadcast.
    phases : ndarray, optional
        Squeeze phase per mode; defaults to zero.
    """
    N = grid.n_nodes
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (N, N):
        raise ValueError(f"h must be {N}x{N}, got {h.shape}")
    if np.abs(h - h.conj().T).max() > 1e-10 * max(1.0, np.abs(h).max()):
        raise ValueError("h must be Hermitian")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")

    H = grid.weight * h  # operator matrix
    eps, Q = np.linalg.eigh(H)
    eps = eps - mu
    if eps.min() <= 0:
        raise ValueError(
            f"spectrum must be positive after the chemical-potential shift; min is {eps.min():.3e}"
        )
    occupation = 1.0 / np.expm1(beta * eps)

    r = np.broadcast_to(np.asarray(squeeze, dtype=float), (N,)).copy()
    th = np.zeros(N) if phases is None else np.asarray(phases, dtype=float)
    if th.shape != (N,):
        raise ValueError(f"phases must have length {N}")

    A = (Q * np.cosh(r)) @ Q.conj().T
    B = (Q * (np.sinh(r) * np.exp(1j * th))) @ Q.T
    W = np.block([[A, B], [B.conj(), A.conj()]])

    G_th = (Q * occupation) @ Q.conj().T
    Z = np.zeros((N, N))
    Gamma_op = np.block([[G_th, Z], [Z, np.eye(N) + G_th.conj()]])
    rotated = W @ Gamma_op @ W.conj().T

    w = grid.weight
    gamma = rotated[:N, :N] / w
    sigma = rotated[:N, N:] / w
    return HfbState(grid, np.zeros(N, dtype=np.complex128), gamma, sigma)


@dataclass(frozen=True)
class XjNorm:
    j: int
    value: float


def xj_norm(state: HfbState, j: int = 0) -> XjNorm:
    """Sobolev-weighted size of a state.

    ``|M^j phi| + ||M^j gamma M^j||_tr + ||M^j sigma||_HS + ||sigma M^j||_HS``
    with ``M = sqrt(1 - Delta)``; all norms are in the weighted discrete
    convention.  ``j = 0`` reduces to ``|phi| + Tr gamma + 2 ||sigma||_HS``.
    """
    if j not in (0, 1, 2, 3):
        raise ValueError(f"order j must be one of 0..3, got {j}")
    grid = state.grid
    w = grid.weight
    if j == 0:
        phi_part = grid.norm(state.phi)
        G = w * state.gamma
        S = w * state.sigma
        tr_part = float(np.abs(np.linalg.eigvalsh(0.5 * (G + G.conj().T))).sum())
        hs = float(np.linalg.norm(S, "fro"))
        return XjNorm(0, phi_part + tr_part + 2.0 * hs)
    M = sobolev_weight(grid, j)
    Mop = M.operator_matrix()
    phi_part = grid.norm(M.apply(state.phi))
    G = w * state.gamma
    S = w * state.sigma
    A = Mop @ G @ Mop
    tr_part = float(np.abs(np.linalg.eigvalsh(0.5 * (A + A.conj().T))).sum())
    hs1 = float(np.linalg.norm(Mop @ S, "fro"))
    hs2 = float(np.linalg.norm(S @ Mop, "fro"))
    return XjNorm(j, phi_part + tr_part + hs1 + hs2)


def state_distance(a: HfbState, b: HfbState, j: int = 0) -> float:
    """X^j-norm of the componentwise difference of two states on one grid."""
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    diff = HfbState(a.grid, a.phi - b.phi, a.gamma - b.gamma, a.sigma - b.sigma)
    return xj_norm(diff, j).value


def gauge_transform(state: HfbState, theta: float) -> HfbState:
    """Global phase rotation: ``(phi, gamma, sigma) -> (e^{i t} phi, gamma, e^{2 i t} sigma)``."""
    ph = np.exp(1j * theta)
    return HfbState(state.grid, ph * state.phi, state.gamma, ph * ph * state.sigma)


# -- binary snapshots --------------------------------------------------------

_HEADER = struct.Struct("<4sqqd")  # magic, d, n, L


def save_snapshot(state: HfbState, path) -> None:
    """Write a state to the binary snapshot format (bit-exact round-trip)."""
    g = state.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, g.d, g.n, g.L))
        fh.write(np.ascontiguousarray(state.phi, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.gamma, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.sigma, dtype="<c16").tobytes())


def load_snapshot(path) -> HfbState:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    magic, d, n, L = _HEADER.unpack_from(raw)
    grid = TorusGrid(d=int(d), L=float(L), n=int(n))
    N = grid.n_nodes
    expected = _HEADER.size + 16 * (N + 2 * N * N)
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated snapshot ({len(raw)} bytes, expected {expected})")
    body = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    phi = body[:N]
    gamma = body[N : N + N * N].reshape(N, N)
    sigma = body[N + N * N :].reshape(N, N)
    return HfbState(grid, phi, gamma, sigma)
