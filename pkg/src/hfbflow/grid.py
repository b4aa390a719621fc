"""Uniform periodic grids and spectral (Fourier-multiplier) operators.

Fields live on the uniform grid over ``[0, L)^d``, flattened row-major, and
are integrated with the quadrature weight ``w = (L/n)^d``.  The discrete
inner product is ``<f, g> = w * sum(conj(f) * g)``.

Transforms use the unnormalized forward DFT of ``numpy.fft``, so Parseval's
identity reads ``w * sum|f|^2 = (w / N) * sum|fhat|^2`` with ``N = n^d``
nodes.

Kernel convention
-----------------
An ``N x N`` matrix ``K`` represents an integral kernel and acts on a field
through ``(K f)(x_i) = w * sum_j K[i, j] f(x_j)``; its trace is
``Tr K = w * sum_i K[i, i]``.  The identity operator therefore has kernel
``eye(N) / w``.  The plain matrix ``w * K`` (the "operator matrix") acts by
ordinary matrix-vector product, and its eigenvalues and singular values are
those of the underlying operator.  The Laplacian is realized with symbol
``-|k|^2`` on the frequency lattice, so ``-Delta`` corresponds to ``+|k|^2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on a periodic box of side ``L`` with ``n`` points per axis.

    Attributes
    ----------
    d : int
        Spatial dimension.
    L : float
        Side length of the box.
    n : int
        Points per axis (a power of two).
    """

    d: int
    L: float
    n: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be positive, got {self.d}")
        if self.L <= 0:
            raise ValueError(f"side length must be positive, got {self.L}")
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"points per axis must be a power of two >= 2, got {self.n}")

    @property
    def spacing(self) -> float:
        return self.L / self.n

    @property
    def weight(self) -> float:
        """Quadrature weight of a single node, ``(L/n)^d``."""
        return (self.L / self.n) ** self.d

    @property
    def n_nodes(self) -> int:
        return self.n**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape ``(n_nodes, d)``, row-major over axes."""
        grids = np.meshgrid(*([self.axis_coordinates] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        """Frequencies ``2*pi*m/L`` with integer ``m`` in ``(-n/2, n/2]``."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        m[m == -self.n // 2] *= -1  # place the Nyquist mode at +n/2
        return 2.0 * np.pi * m / self.L

    @cached_property
    def frequency_grids(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis_frequencies] * self.d), indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        """``|k|^2`` on the frequency lattice, shape ``(n,)*d``."""
        out = np.zeros(self.shape)
        for kg in self.frequency_grids:
            out += kg**2
        return out

    @cached_property
    def _axis_indices(self) -> tuple[np.ndarray, ...]:
        return tuple(ix.ravel() for ix in np.indices(self.shape))

    @cached_property
    def _difference_index(self) -> np.ndarray:
        """Flat index of ``(x_i - x_j) mod L`` for circulant kernel assembly."""
        out = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int64)
        for a, ix in enumerate(self._axis_indices):
            stride = self.n ** (self.d - 1 - a)
            out += ((ix[:, None] - ix[None, :]) % self.n) * stride
        return out

    @cached_property
    def _negation_index(self) -> np.ndarray:
        """Flat index of ``-x_i mod L`` for parity checks."""
        out = np.zeros(self.n_nodes, dtype=np.int64)
        for a, ix in enumerate(self._axis_indices):
            stride = self.n ** (self.d - 1 - a)
            out += ((-ix) % self.n) * stride
        return out

    # -- weighted linear algebra -------------------------------------------

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return self.weight * np.vdot(f, g)

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.weight * np.vdot(f, f).real))

    def kapply(self, kernel: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Apply a kernel to a field: ``w * kernel @ f``."""
        return self.weight * (kernel @ f)

    def kmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel of the composition of two kernels: ``w * a @ b``."""
        return self.weight * (a @ b)

    def ktrace(self, kernel: np.ndarray) -> complex:
        return self.weight * np.trace(kernel)

    def hs_norm(self, kernel: np.ndarray) -> float:
        """Hilbert-Schmidt norm of a kernel, ``w * ||kernel||_F``."""
        return float(self.weight * np.linalg.norm(kernel, "fro"))

    def circulant_kernel(self, values: np.ndarray) -> np.ndarray:
        """Kernel ``K[i, j] = values[(x_i - x_j) mod L]`` from flat node values."""
        values = np.asarray(values).ravel()
        if values.size != self.n_nodes:
            raise ValueError(f"expected {self.n_nodes} values, got {values.size}")
        return values[self._difference_index]


def make_grid(d: int, L: float, n: int) -> TorusGrid:
    """Build a grid, enforcing ``d in {1, 2, 3}``, ``L > 0``, ``n`` a power of two >= 4."""
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if L <= 0:
        raise ValueError(f"side length must be positive, got {L}")
    if n < 4 or (n & (n - 1)) != 0:
        raise ValueError(f"points per axis must be a power of two >= 4, got {n}")
    return TorusGrid(d=d, L=float(L), n=int(n))


@dataclass(frozen=True)
class MultiplierOperator:
    """A Fourier-multiplier operator with symbol values on the frequency lattice.

    Application equals inverse DFT of (symbol * DFT of the field).  Real even
    symbols give operators that are self-adjoint for the weighted inner
    product.
    """

    grid: TorusGrid
    symbol: np.ndarray  # flat, length n_nodes

    def __post_init__(self) -> None:
        sym = np.asarray(self.symbol).ravel()
        if sym.size != self.grid.n_nodes:
            raise ValueError(f"symbol has {sym.size} entries, expected {self.grid.n_nodes}")
        object.__setattr__(self, "symbol", sym)

    def apply(self, field: np.ndarray) -> np.ndarray:
        field = np.asarray(field).ravel()
        if field.size != self.grid.n_nodes:
            raise ValueError(f"field has {field.size} entries, expected {self.grid.n_nodes}")
        shaped = field.reshape(self.grid.shape)
        out = np.fft.ifftn(self.symbol.reshape(self.grid.shape) * np.fft.fftn(shaped))
        return out.ravel()

    def operator_matrix(self) -> np.ndarray:
        """Dense matrix acting by plain matrix-vector product."""
        tau = np.fft.ifftn(self.symbol.reshape(self.grid.shape)).ravel()
        mat = self.grid.circulant_kernel(tau)
        if np.abs(mat.imag).max() < 1e-13 * max(1.0, np.abs(mat.real).max()):
            return np.ascontiguousarray(mat.real)
        return mat

    def to_kernel(self) -> np.ndarray:
        """Same operator in the kernel convention (operator matrix over ``w``)."""
        return self.operator_matrix() / self.grid.weight


def apply_multiplier(op: MultiplierOperator, field: np.ndarray) -> np.ndarray:
    return op.apply(field)


def laplacian(grid: TorusGrid) -> MultiplierOperator:
    """The Laplacian; its symbol is ``-|k|^2``."""
    return MultiplierOperator(grid, -grid.k_squared.ravel())


def sobolev_weight(grid: TorusGrid, j: int = 1) -> MultiplierOperator:
    """The operator ``(1 - Delta)^{j/2}`` with symbol ``(1 + |k|^2)^{j/2}``."""
    return MultiplierOperator(grid, (1.0 + grid.k_squared.ravel()) ** (j / 2.0))


def _mode_vector(grid: TorusGrid, mode) -> np.ndarray:
    m = np.atleast_1d(np.asarray(mode, dtype=float))
    if m.size == 1 and grid.d > 1:
        m = np.repeat(m, grid.d)
    if m.size != grid.d:
        raise ValueError(f"mode must have {grid.d} components, got {m.size}")
    return m


def _periodized_gaussian(grid: TorusGrid, amplitude: float, width: float, center) -> np.ndarray:
    if width <= 0:
        raise ValueError(f"gaussian width must be positive, got {width}")
    c = np.zeros(grid.d) if center is None else np.atleast_1d(np.asarray(center, float))
    if c.size != grid.d:
        raise ValueError(f"center must have {grid.d} components, got {c.size}")
    X = grid.coordinates
    total = np.zeros(grid.n_nodes)
    shell = 0
    while True:
        added = np.zeros(grid.n_nodes)
        for nu in itertools.product(range(-shell, shell + 1), repeat=grid.d):
            if max(abs(c_) for c_ in nu) != shell:
                continue
            delta = X - c - grid.L * np.asarray(nu, float)
            added += np.exp(-np.sum(delta**2, axis=1) / (2.0 * width**2))
        total += added
        # image sums converge geometrically; stop once a shell is negligible
        if shell >= 1 and added.max() <= 1e-14 * max(total.max(), 1e-300):
            break
        if shell > 64:
            raise ValueError("periodized gaussian image sum failed to converge")
        shell += 1
    return amplitude * total


def sample_field(grid: TorusGrid, spec: Mapping) -> np.ndarray:
    """Sample a closed-form field specification on the grid nodes.

    Supported kinds: ``constant``, ``cosine``, ``plane_wave``, ``gaussian``
    (periodized by image sums, truncated at 1e-14 relative tail) and
    ``table`` (explicit node values).
    """
    kind = str(spec.get("kind", "")).replace("-", "_")
    if kind == "constant":
        value = complex(spec.get("value", 0.0))
        fill = value.real if value.imag == 0.0 else value
        return np.full(grid.n_nodes, fill)
    if kind == "cosine":
        m = _mode_vector(grid, spec.get("mode", 1))
        amp = float(spec.get("amplitude", 1.0))
        phase = float(spec.get("phase", 0.0))
        offset = float(spec.get("offset", 0.0))
        arg = 2.0 * np.pi * (grid.coordinates @ m) / grid.L + phase
        return offset + amp * np.cos(arg)
    if kind == "plane_wave":
        m = _mode_vector(grid, spec.get("mode", 1))
        amp = complex(spec.get("amplitude", 1.0))
        arg = 2.0 * np.pi * (grid.coordinates @ m) / grid.L
        return amp * np.exp(1j * arg)
    if kind == "gaussian":
        return _periodized_gaussian(
            grid,
            float(spec.get("amplitude", 1.0)),
            float(spec.get("width", 0.5)),
            spec.get("center"),
        )
    if kind == "table":
        values = np.asarray(spec["values"]).ravel()
        if values.size != grid.n_nodes:
            raise ValueError(f"table has {values.size} values, expected {grid.n_nodes}")
        return values.copy()
    if kind == "zero":
        return np.zeros(grid.n_nodes)
    raise ValueError(f"unknown field spec kind {spec.get('kind')!r}")


def pair_kernel(grid: TorusGrid, spec: Mapping) -> np.ndarray:
    """Matrix ``V[i, j] = v_per(x_i - x_j)`` for an even real pair potential.

    The sampled potential must be real and even on the node lattice; an odd
    part above ``1e-12`` (relative to the max) is rejected.
    """
    values = sample_field(grid, spec)
    if np.iscomplexobj(values):
        if np.abs(values.imag).max() > 1e-12 * max(1.0, np.abs(values).max()):
            raise ValueError("pair potential must be real-valued")
        values = values.real
    odd = 0.5 * (values - values[grid._negation_index])
    if np.abs(odd).max() > 1e-12 * max(1.0, np.abs(values).max()):
        raise ValueError(
            f"pair potential must be even; odd part has max {np.abs(odd).max():.3e}"
        )
    return grid.circulant_kernel(values)
