"""Equations of motion, time integrators, and the propagator cross-check.

The evolution of ``(phi, gamma, sigma)`` is

    i d/dt phi   = h(gamma) phi + k(sigma^phi) conj(phi)
    i d/dt gamma = [h(gamma^phi), gamma] + k(sigma^phi) sigma^* - sigma k(sigma^phi)^*
    i d/dt sigma = [h(gamma^phi), sigma]_+ + [k(sigma^phi), gamma]_+ + k(sigma^phi)

with ``gamma^phi = gamma + |phi><phi|``, ``sigma^phi = sigma + phi (x) phi``
and the transpose bracket ``[A, B]_+ = A B^T + B A^T``.  All products are
kernel products (carrying the quadrature weight).

Sign conventions frozen here (validated against the brute-force two-node
oracle in :mod:`hfbflow.oracle`):

* free sigma flow: ``sigma_t = U sigma_0 U^T`` with ``U = exp(-i t h)``;
* propagator cross-check: ``i dW/dt = A(t) W`` with the operator block
  ``A = [[H, K], [-conj(K), -conj(H)]]``, under which the generalized
  density matrix evolves by congruence, ``Gamma_t = W Gamma_0 W^dagger``,
  and ``W J W^dagger = J`` is preserved for ``J = diag(I, -I)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from .grid import TorusGrid
from .meanfield import (
    _kinetic_kernel,
    _mean_field_shift_lax,
    hfb_generator,
    mean_field_h,
    mean_field_shift,
    pairing_k,
)
from .state import HfbState, generalized_density_matrix, state_distance


class NumericalAbort(RuntimeError):
    """Raised when an integration produces non-finite values."""

    def __init__(self, t: float, last_state: HfbState):
        super().__init__(f"non-finite values at t = {t:.6g}")
        self.t = t
        self.last_state = last_state


@dataclass(frozen=True)
class Tangent:
    """Time derivative of a state triple."""

    dphi: np.ndarray
    dgamma: np.ndarray
    dsigma: np.ndarray


def _rhs_raw(grid, V_field, v_kernel, phi, gamma, sigma):
    w = grid.weight
    P = np.outer(phi, phi.conj())
    sigma_ph = sigma + np.outer(phi, phi)
    h_gamma = mean_field_h(grid, V_field, v_kernel, gamma)
    h_full = h_gamma + mean_field_shift(grid, v_kernel, P)
    k_eff = pairing_k(v_kernel, sigma_ph)

    dphi = -1j * w * (h_gamma @ phi + k_eff @ phi.conj())
    dgamma = -1j * w * (
        h_full @ gamma - gamma @ h_full + k_eff @ sigma.conj() - sigma @ k_eff.conj()
    )
    dsigma = -1j * (
        w * (h_full @ sigma + sigma @ h_full.T + k_eff @ gamma.T + gamma @ k_eff)
        + k_eff
    )
    return dphi, dgamma, dsigma


def rhs(state: HfbState, grid: TorusGrid, V_field, v_kernel) -> Tangent:
    """Evaluate the full right-hand side at a state."""
    return Tangent(*_rhs_raw(grid, V_field, v_kernel, state.phi, state.gamma, state.sigma))


def _f_raw(grid, V_field, v_kernel, phi, gamma, sigma):
    """Nonlinear part of the right-hand side (the linear part is the bare flow).

    Evaluated with the lax interaction assembly: Duhamel iterates are not
    Hermitian, so the density may carry an imaginary part here.
    """
    w = grid.weight
    P = np.outer(phi, phi.conj())
    pair_src = np.outer(phi, phi)
    b_gamma = _mean_field_shift_lax(grid, v_kernel, gamma)
    b_full = b_gamma + _mean_field_shift_lax(grid, v_kernel, P)
    k_eff = pairing_k(v_kernel, sigma + pair_src)
    k_src = pairing_k(v_kernel, pair_src)

    dphi = -1j * w * (b_gamma @ phi + k_eff @ phi.conj())
    dgamma = -1j * w * (
        b_full @ gamma - gamma @ b_full + k_eff @ sigma.conj() - sigma @ k_eff.conj()
    )
    dsigma = -1j * (
        w * (b_full @ sigma + sigma @ b_full.T + k_eff @ gamma.T + gamma @ k_eff)
        + k_src
    )
    return dphi, dgamma, dsigma


def rhs_split(state: HfbState, grid: TorusGrid, V_field, v_kernel) -> tuple[Tangent, Tangent]:
    """Split the right-hand side into the bare linear part and the rest.

    The two parts sum to :func:`rhs` entrywise (an algebraic identity).
    The linear part keeps the pairing term ``k(sigma)`` so that the bare
    flow is a one-parameter group; the remainder then carries the pair
    source ``k(phi (x) phi)`` in its sigma component.
    """
    w = grid.weight
    phi, gamma, sigma = state.phi, state.gamma, state.sigma
    h0 = _kinetic_kernel(grid) + np.diag(np.asarray(V_field).ravel()) / w
    k_sigma = pairing_k(v_kernel, sigma)
    a_phi = -1j * w * (h0 @ phi)
    a_gamma = -1j * w * (h0 @ gamma - gamma @ h0)
    a_sigma = -1j * (w * (h0 @ sigma + sigma @ h0.T) + k_sigma)
    linear = Tangent(a_phi, a_gamma, a_sigma)
    rest = Tangent(*_f_raw(grid, V_field, v_kernel, phi, gamma, sigma))
    return linear, rest


def _rk4_raw(grid, V_field, v_kernel, phi, gamma, sigma, dt):
    a1, b1, c1 = _rhs_raw(grid, V_field, v_kernel, phi, gamma, sigma)
    a2, b2, c2 = _rhs_raw(
        grid, V_field, v_kernel, phi + 0.5 * dt * a1, gamma + 0.5 * dt * b1, sigma + 0.5 * dt * c1
    )
    a3, b3, c3 = _rhs_raw(
        grid, V_field, v_kernel, phi + 0.5 * dt * a2, gamma + 0.5 * dt * b2, sigma + 0.5 * dt * c2
    )
    a4, b4, c4 = _rhs_raw(
        grid, V_field, v_kernel, phi + dt * a3, gamma + dt * b3, sigma + dt * c3
    )
    sixth = dt / 6.0
    return (
        phi + sixth * (a1 + 2 * a2 + 2 * a3 + a4),
        gamma + sixth * (b1 + 2 * b2 + 2 * b3 + b4),
        sigma + sixth * (c1 + 2 * c2 + 2 * c3 + c4),
    )


def step_rk4(state: HfbState, grid: TorusGrid, V_field, v_kernel, dt: float) -> HfbState:
    """One classical Runge-Kutta step.  No re-symmetrization is applied."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    phi, gamma, sigma = _rk4_raw(grid, V_field, v_kernel, state.phi, state.gamma, state.sigma, dt)
    if not (np.isfinite(phi).all() and np.isfinite(gamma).all() and np.isfinite(sigma).all()):
        raise NumericalAbort(dt, state)
    return HfbState(grid, phi, gamma, sigma)


@dataclass(frozen=True)
class Trajectory:
    """States sampled every ``stride`` steps of a fixed-step integration."""

    times: tuple[float, ...]
    states: tuple[HfbState, ...]
    dt: float
    stride: int

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> HfbState:
        return self.states[-1]


def evolve(
    state0: HfbState,
    grid: TorusGrid,
    V_field,
    v_kernel,
    T: float,
    dt: float,
    scheme: str = "rk4",
    stride: int = 1,
    observers: Sequence[Callable[[int, float, HfbState], None]] = (),
) -> Trajectory:
    """Integrate from ``t = 0`` to ``t = T`` with fixed step ``dt``.

    ``dt`` must divide ``T``.  States are recorded (and observers invoked)
    every ``stride`` steps, always including the initial and final states.
    Non-finite values abort the run with the last valid state attached.
    """
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if scheme != "rk4":
        raise ValueError(f"unknown scheme {scheme!r}")
    steps = int(round(T / dt)) if T > 0 else 0
    if T > 0 and abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"dt = {dt} does not divide T = {T}")

    kinetic_scale = float(grid.k_squared.max()) + float(np.abs(np.asarray(V_field)).max())
    if kinetic_scale > 0 and dt >= 1.0 / kinetic_scale:
        warnings.warn(
            f"dt = {dt:g} is at or above the fastest resolved period "
            f"1/{kinetic_scale:g}; expect inaccurate or unstable stepping",
            stacklevel=2,
        )

    phi = state0.phi.copy()
    gamma = state0.gamma.copy()
    sigma = state0.sigma.copy()
    times = [0.0]
    states = [state0]
    for obs in observers:
        obs(0, 0.0, state0)
    for m in range(1, steps + 1):
        phi, gamma, sigma = _rk4_raw(grid, V_field, v_kernel, phi, gamma, sigma, dt)
        t = m * dt
        if not (np.isfinite(phi).all() and np.isfinite(gamma).all() and np.isfinite(sigma).all()):
            raise NumericalAbort(t, states[-1])
        if m % stride == 0 or m == steps:
            snap = HfbState(grid, phi, gamma, sigma)
            times.append(t)
            states.append(snap)
            for obs in observers:
                obs(m, t, snap)
    return Trajectory(tuple(times), tuple(states), dt, stride)


# -- mild-solution (Duhamel) verification integrator -------------------------


class _BareFlow:
    """Group ``G(t) = exp(-i t A)`` of the bare linear part.

    ``phi`` and ``gamma`` evolve through the one-body propagator; the sigma
    component evolves under ``S -> H S + S H^T + v # S``, a Hermitian map on
    the space of matrices.  For small grids this map is diagonalized once;
    larger grids fall back to stepping the linear equation with an inner
    fixed-step integrator (documented trade-off: exactness vs memory).
    """

    _EXACT_LIMIT = 32  # diagonalize the N^2-dimensional sigma map up to this N

    def __init__(self, grid: TorusGrid, V_field, v_kernel):
        self.grid = grid
        w = grid.weight
        h0 = _kinetic_kernel(grid) + np.diag(np.asarray(V_field).ravel()) / w
        self.H = w * h0
        self.v_kernel = v_kernel
        self.energies, self.modes = np.linalg.eigh(self.H)
        N = grid.n_nodes
        if N <= self._EXACT_LIMIT:
            eye = np.eye(N)
            L = np.kron(self.H, eye) + np.kron(eye, self.H) + np.diag(v_kernel.ravel())
            self.sig_energies, self.sig_modes = np.linalg.eigh(L)
        else:
            self.sig_energies = self.sig_modes = None
            scale = max(float(np.abs(self.energies).max()) + float(np.abs(v_kernel).max()), 1e-12)
            self._sigma_dt = 0.1 / scale

    def _one_body(self, t: float) -> np.ndarray:
        return (self.modes * np.exp(-1j * t * self.energies)) @ self.modes.conj().T

    def _sigma_flow(self, sigma: np.ndarray, t: float) -> np.ndarray:
        if self.sig_modes is not None:
            vec = self.sig_modes.conj().T @ sigma.ravel()
            vec = np.exp(-1j * t * self.sig_energies) * vec
            N = self.grid.n_nodes
            return (self.sig_modes @ vec).reshape(N, N)
        # inner fixed-step RK4 on the linear sigma equation
        steps = max(1, int(np.ceil(abs(t) / self._sigma_dt)))
        h = t / steps
        S = sigma
        for _ in range(steps):
            k1 = self._sigma_rhs(S)
            k2 = self._sigma_rhs(S + 0.5 * h * k1)
            k3 = self._sigma_rhs(S + 0.5 * h * k2)
            k4 = self._sigma_rhs(S + h * k3)
            S = S + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return S

    def _sigma_rhs(self, S: np.ndarray) -> np.ndarray:
        return -1j * (self.H @ S + S @ self.H.T + self.v_kernel * S)

    def apply(self, triple, t: float):
        phi, gamma, sigma = triple
        U = self._one_body(t)
        return U @ phi, U @ gamma @ U.conj().T, self._sigma_flow(sigma, t)


@dataclass(frozen=True)
class PicardInfo:
    iterations: int
    corrections: tuple[float, ...]
    factors: tuple[float, ...]

    @property
    def contraction(self) -> float:
        return self.factors[-1] if self.factors else 0.0

    @property
    def contracting(self) -> bool:
        return all(f < 1.0 for f in self.factors)


def _cumulative_simpson_complex(values: np.ndarray, dx: float) -> np.ndarray:
    re = cumulative_simpson(values.real, dx=dx, axis=0, initial=0.0)
    im = cumulative_simpson(values.imag, dx=dx, axis=0, initial=0.0)
    return re + 1j * im


def picard_mild(
    state0: HfbState,
    grid: TorusGrid,
    V_field,
    v_kernel,
    t: float,
    dt: float,
    iterations: int,
) -> tuple[HfbState, PicardInfo]:
    """Fixed-point iteration of the Duhamel integral form of the dynamics.

    The iterate is stored on a uniform grid over ``[0, t]`` and the time
    integral is evaluated with composite Simpson quadrature, writing
    ``G(t - s) = G(t) G(-s)`` so the integrand is cumulative in ``s``.
    Returns the final iterate at time ``t`` together with the successive
    correction sizes and their ratios; a last ratio at or above one means
    the horizon exceeds the contraction window at this resolution.
    """
    if grid.n_nodes > 256:
        raise ValueError("mild-solution verification is restricted to grids with at most 256 nodes")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if t < 0 or dt <= 0:
        raise ValueError("require t >= 0 and dt > 0")

    panels = max(2, int(round(t / dt)))
    panels += panels % 2
    dt_p = t / panels if t > 0 else 0.0
    s_values = np.arange(panels + 1) * dt_p

    flow = _BareFlow(grid, V_field, v_kernel)
    rho0 = (state0.phi, state0.gamma, state0.sigma)
    if t == 0.0:
        return state0, PicardInfo(iterations, (), ())

    iterate = [flow.apply(rho0, s) for s in s_values]
    corrections: list[float] = []
    factors: list[float] = []
    for _ in range(iterations):
        pulled = []
        for j, s in enumerate(s_values):
            fj = _f_raw(grid, V_field, v_kernel, *iterate[j])
            pulled.append(flow.apply(fj, -s))
        stacks = [np.stack([p[c] for p in pulled]) for c in range(3)]
        integrals = [_cumulative_simpson_complex(st, dt_p) for st in stacks]
        new_iterate = []
        for j, s in enumerate(s_values):
            # the nonlinearity is evaluated in tangent form (with its -i
            # already applied), so the Duhamel correction enters with +1
            shifted = tuple(rho0[c] + integrals[c][j] for c in range(3))
            new_iterate.append(flow.apply(shifted, s))
        delta = max(
            state_distance(
                HfbState(grid, *new_iterate[j]), HfbState(grid, *iterate[j])
            )
            for j in range(len(s_values))
        )
        if corrections:
            prev = corrections[-1]
            factors.append(delta / prev if prev > 0 else 0.0)
        corrections.append(delta)
        iterate = new_iterate
        if delta == 0.0:
            break
    final = HfbState(grid, *iterate[-1])
    return final, PicardInfo(iterations, tuple(corrections), tuple(factors))


# -- propagator (congruence) cross-check --------------------------------------


@dataclass(frozen=True)
class BogoliubovReport:
    """Defects of the propagator formulation along a trajectory.

    ``symplectic_defect`` is ``max_t |W J W^dag - J|`` and
    ``reconstruction_defect`` is ``max_t |Gamma(t) - W Gamma(0) W^dag|``
    (entrywise, in kernel units).  ``final_propagator`` is ``W`` at the last
    stamp, in the plain operator representation.
    """

    times: tuple[float, ...]
    symplectic_defects: tuple[float, ...]
    reconstruction_defects: tuple[float, ...]
    final_propagator: np.ndarray

    @property
    def symplectic_defect(self) -> float:
        return max(self.symplectic_defects)

    @property
    def reconstruction_defect(self) -> float:
        return max(self.reconstruction_defects)


def bogoliubov_check(
    trajectory: Trajectory,
    grid: TorusGrid,
    V_field,
    v_kernel,
    substeps: int = 8,
) -> BogoliubovReport:
    """Integrate ``i dW/dt = A(t) W`` along a trajectory and compare formulations.

    ``A(t)`` is the quadratic-generator block evaluated at the stored states
    and interpolated linearly between stamps; ``W`` is advanced by RK4 with
    ``substeps`` sub-intervals per stored interval (substepping keeps the
    integrator's own symplectic-defect floor well below the thresholds of
    interest).  Reports the symplectic defect and the congruence
    reconstruction defect of the generalized density matrix.
    """
    if grid.n_nodes > 256:
        raise ValueError("propagator check is restricted to grids with at most 256 nodes")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    N = grid.n_nodes
    blocks = [
        hfb_generator(s, grid, V_field, v_kernel).block for s in trajectory.states
    ]
    J = np.diag(np.concatenate([np.ones(N), -np.ones(N)]))
    W = np.eye(2 * N, dtype=np.complex128)
    Gamma0 = generalized_density_matrix(trajectory.states[0])

    sympl = [float(np.abs(W @ J @ W.conj().T - J).max())]
    recon = [0.0]
    for m in range(len(trajectory) - 1):
        A0, A1 = blocks[m], blocks[m + 1]
        h = (trajectory.times[m + 1] - trajectory.times[m]) / substeps
        for s in range(substeps):
            def A_at(frac):
                u = (s + frac) / substeps
                return (1.0 - u) * A0 + u * A1

            Ah = A_at(0.5)
            q1 = -1j * (A_at(0.0) @ W)
            q2 = -1j * (Ah @ (W + 0.5 * h * q1))
            q3 = -1j * (Ah @ (W + 0.5 * h * q2))
            q4 = -1j * (A_at(1.0) @ (W + h * q3))
            W = W + h / 6.0 * (q1 + 2 * q2 + 2 * q3 + q4)
        sympl.append(float(np.abs(W @ J @ W.conj().T - J).max()))
        Gamma_t = generalized_density_matrix(trajectory.states[m + 1])
        recon.append(float(np.abs(Gamma_t - W @ Gamma0 @ W.conj().T).max()))
    return BogoliubovReport(trajectory.times, tuple(sympl), tuple(recon), W)
