"""Conserved quantities, monitored inequalities, and per-step diagnostics.

The two conserved quantities of the flow are the total particle number
``N = Tr gamma + |phi|^2`` and the energy functional.  Only the sum
``Tr gamma + |phi|^2`` is conserved: the condensate and the pairing channel
exchange particles with ``gamma``, so ``Tr gamma`` alone drifts (this is
monitored, not asserted).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .grid import TorusGrid, sobolev_weight
from .meanfield import k_estimate_ratio, mean_field_shift, _kinetic_kernel
from .state import HfbState, generalized_density_matrix, xj_norm


def particle_number(state: HfbState) -> float:
    """Total particle number ``Tr gamma + |phi|^2`` (weighted discrete forms)."""
    g = state.grid
    return float((g.weight * np.vdot(state.phi, state.phi) + g.ktrace(state.gamma)).real)


def energy(state: HfbState, grid: TorusGrid, V_field, v_kernel) -> float:
    """Total energy of a state.

    Sum of the one-body trace with the condensate folded in, the
    condensate/fluctuation cross term, half the fluctuation self-interaction,
    and half the pair-channel double integral
    ``w^2/2 * sum_ij v(x_i - x_j) |sigma[i, j] + phi_i phi_j|^2``.
    """
    w = grid.weight
    phi = state.phi
    P = np.outer(phi, phi.conj())
    gamma_ph = state.gamma + P
    h0 = _kinetic_kernel(grid) + np.diag(np.asarray(V_field).ravel()) / w
    total = w * w * np.trace(h0 @ gamma_ph)
    total += w * w * np.trace(mean_field_shift(grid, v_kernel, P) @ state.gamma)
    total += 0.5 * w * w * np.trace(mean_field_shift(grid, v_kernel, state.gamma) @ state.gamma)
    sigma_ph = state.sigma + np.outer(phi, phi)
    total += 0.5 * w * w * np.sum(v_kernel * np.abs(sigma_ph) ** 2)
    total = complex(total)
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise ValueError(
            f"energy has imaginary part {total.imag:.3e}; Hermiticity is broken upstream"
        )
    return total.real


def sigma_bound_parts(state: HfbState) -> tuple[float, float]:
    """Left and right sides of the pairing-size bound.

    Returns ``(lhs, rhs)`` with ``lhs = ||M sigma||_HS^2 + ||sigma M||_HS^2``
    and ``rhs = 2 ||M gamma M||_tr (1 + Tr gamma)``.  The sum-of-squares
    convention on the left is the one that admissible states actually
    satisfy: single-mode squeezed states saturate it with equality, and the
    same states strictly violate the seemingly natural ``(a + b)^2``
    variant, so the latter is not used.
    """
    grid = state.grid
    w = grid.weight
    Mop = sobolev_weight(grid, 1).operator_matrix()
    S = w * state.sigma
    G = w * state.gamma
    lhs = np.linalg.norm(Mop @ S, "fro") ** 2 + np.linalg.norm(S @ Mop, "fro") ** 2
    A = Mop @ G @ Mop
    trace_norm = float(np.abs(np.linalg.eigvalsh(0.5 * (A + A.conj().T))).sum())
    rhs = 2.0 * trace_norm * (1.0 + float(np.trace(G).real))
    return float(lhs), rhs


def sigma_bound_slack(state: HfbState) -> float:
    """Slack ``rhs - lhs`` of the pairing-size bound; nonnegative on admissible states."""
    lhs, rhs = sigma_bound_parts(state)
    return rhs - lhs


def gamma_floor(state: HfbState) -> float:
    """Smallest eigenvalue of the (Hermitized) generalized density matrix."""
    big = generalized_density_matrix(state)
    return float(np.linalg.eigvalsh(0.5 * (big + big.conj().T)).min())


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Snapshot of every conserved and monitored quantity at one instant."""

    t: float
    n_total: float
    n_gamma: float
    n_phi: float
    energy: float
    gamma_floor: float
    sigma_slack: float
    k_ratio: float
    x1_norm: float
    gamma_herm_defect: float
    sigma_sym_defect: float

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.columns())


def record(state: HfbState, t: float, grid: TorusGrid, V_field, v_kernel) -> DiagnosticsRecord:
    """Assemble the full diagnostics record for one state.

    The pairing-to-size ratio column is zero when sigma vanishes (the ratio
    is undefined there).
    """
    w = grid.weight
    n_phi = float(w * np.vdot(state.phi, state.phi).real)
    n_gamma = float(grid.ktrace(state.gamma).real)
    if np.any(state.sigma):
        ratio = k_estimate_ratio(grid, v_kernel, state.sigma, sobolev_weight(grid, 1))
    else:
        ratio = 0.0
    return DiagnosticsRecord(
        t=t,
        n_total=n_phi + n_gamma,
        n_gamma=n_gamma,
        n_phi=n_phi,
        energy=energy(state, grid, V_field, v_kernel),
        gamma_floor=gamma_floor(state),
        sigma_slack=sigma_bound_slack(state),
        k_ratio=ratio,
        x1_norm=xj_norm(state, 1).value,
        gamma_herm_defect=float(np.abs(state.gamma - state.gamma.conj().T).max()),
        sigma_sym_defect=float(np.abs(state.sigma - state.sigma.T).max()),
    )


def format_float(x: float) -> str:
    """17-significant-digit decimal form (lossless double round-trip)."""
    return f"{x:.17g}"


def write_diagnostics_csv(records, path) -> None:
    """One header row, one record per line, fixed column order."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(DiagnosticsRecord.columns()) + "\n")
        for rec in records:
            fh.write(",".join(format_float(x) for x in rec.row()) + "\n")


def read_diagnostics_csv(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}
