"""Flat key-value run configuration.

The on-disk format is one ``section.key = value`` assignment per line, with
``#`` comments and blank lines ignored; there is no nesting beyond the
single dotted prefix.  Parsing, serializing and re-parsing a configuration
is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import TorusGrid, make_grid, pair_kernel, sample_field
from .state import HfbState, coherent_state, load_snapshot, squeezed_thermal_state


class ConfigError(ValueError):
    """Invalid or missing run-configuration data; carries the field name."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in out:
            raise ConfigError(key, "duplicate key")
        out[key] = value
    return out


def serialize_config(raw: dict[str, str]) -> str:
    return "".join(f"{k} = {raw[k]}\n" for k in sorted(raw))


@dataclass(frozen=True)
class RunConfig:
    """Typed view of a run configuration plus the raw key-value mapping."""

    raw: dict[str, str] = field(compare=True)
    grid_d: int = field(compare=False, default=1)
    grid_L: float = field(compare=False, default=0.0)
    grid_n: int = field(compare=False, default=0)
    dt: float = field(compare=False, default=0.0)
    T: float = field(compare=False, default=0.0)
    stride: int = field(compare=False, default=1)
    scheme: str = field(compare=False, default="rk4")
    seed: int | None = field(compare=False, default=None)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_mapping(parse_config_text(text))

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "RunConfig":
        def require(key: str) -> str:
            if key not in raw:
                raise ConfigError(key, "missing required field")
            return raw[key]

        def as_int(key: str, value: str) -> int:
            try:
                return int(value)
            except ValueError:
                raise ConfigError(key, f"expected an integer, got {value!r}") from None

        def as_float(key: str, value: str) -> float:
            try:
                return float(value)
            except ValueError:
                raise ConfigError(key, f"expected a number, got {value!r}") from None

        d = as_int("grid.d", require("grid.d"))
        L = as_float("grid.L", require("grid.L"))
        n = as_int("grid.n", require("grid.n"))
        dt = as_float("integrator.dt", require("integrator.dt"))
        T = as_float("integrator.T", require("integrator.T"))
        stride = as_int("integrator.stride", raw.get("integrator.stride", "1"))
        scheme = raw.get("integrator.scheme", "rk4")
        for key, name in (("potential.kind", "potential.kind"), ("pair.kind", "pair.kind"),
                          ("state.kind", "state.kind")):
            require(name)
        if dt <= 0:
            raise ConfigError("integrator.dt", "must be positive")
        if T < 0:
            raise ConfigError("integrator.T", "must be nonnegative")
        if T > 0 and dt > T:
            raise ConfigError("integrator.dt", f"dt = {dt} exceeds T = {T}")
        if T > 0 and abs(round(T / dt) * dt - T) > 1e-9 * max(1.0, T):
            raise ConfigError("integrator.dt", f"dt = {dt} does not divide T = {T}")
        if stride < 1:
            raise ConfigError("integrator.stride", "must be >= 1")
        seed = None
        if "run.seed" in raw:
            seed = as_int("run.seed", raw["run.seed"])
        return cls(raw=dict(raw), grid_d=d, grid_L=L, grid_n=n, dt=dt, T=T,
                   stride=stride, scheme=scheme, seed=seed)

    # -- typed accessors used by the driver ----------------------------------

    def _bool(self, key: str, default: bool) -> bool:
        value = self.raw.get(key)
        if value is None:
            return default
        lowered = value.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(key, f"expected a boolean, got {value!r}")

    def _float(self, key: str, default: float) -> float:
        value = self.raw.get(key)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError:
            raise ConfigError(key, f"expected a number, got {value!r}") from None

    @property
    def free_flow_check(self) -> bool:
        return self._bool("check.free_flow", False)

    @property
    def free_flow_tol(self) -> float:
        return self._float("check.tol", 1e-8)

    @property
    def positivity_guard(self) -> bool:
        return self._bool("guards.positivity", True)

    @property
    def positivity_tol(self) -> float:
        return self._float("guards.positivity_tol", 1e-8)

    def field_spec(self, prefix: str) -> dict:
        """Collect ``prefix.*`` keys into a field specification mapping."""
        kind = self.raw.get(f"{prefix}.kind")
        if kind is None:
            raise ConfigError(f"{prefix}.kind", "missing required field")
        spec: dict = {"kind": kind}
        scalar_keys = ("value", "amplitude", "width", "phase", "offset", "g")
        for key in scalar_keys:
            raw_key = f"{prefix}.{key}"
            if raw_key in self.raw:
                try:
                    spec[key] = float(self.raw[raw_key])
                except ValueError:
                    raise ConfigError(raw_key, "expected a number") from None
        for key in ("mode", "center"):
            raw_key = f"{prefix}.{key}"
            if raw_key in self.raw:
                parts = [p for p in self.raw[raw_key].replace(",", " ").split() if p]
                try:
                    values = [float(p) for p in parts]
                except ValueError:
                    raise ConfigError(raw_key, "expected numbers") from None
                spec[key] = values if len(values) > 1 else values[0]
        if f"{prefix}.file" in self.raw:
            spec["file"] = self.raw[f"{prefix}.file"]
        # "g" is the conventional name for the pair-coupling amplitude
        if "g" in spec:
            target = "value" if spec["kind"] == "constant" else "amplitude"
            spec.setdefault(target, spec.pop("g"))
        return spec

    def build_grid(self) -> TorusGrid:
        try:
            return make_grid(self.grid_d, self.grid_L, self.grid_n)
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None

    def build_potential(self, grid: TorusGrid) -> np.ndarray:
        spec = self.field_spec("potential")
        if "file" in spec:
            spec = {"kind": "table", "values": np.load(spec["file"])}
        try:
            V = sample_field(grid, spec)
        except ValueError as exc:
            raise ConfigError("potential", str(exc)) from None
        if np.iscomplexobj(V):
            if np.abs(V.imag).max() > 1e-12 * max(1.0, np.abs(V).max()):
                raise ConfigError("potential", "external potential must be real")
            V = V.real
        return V

    def build_pair_kernel(self, grid: TorusGrid) -> np.ndarray:
        spec = self.field_spec("pair")
        if "file" in spec:
            spec = {"kind": "table", "values": np.load(spec["file"])}
        try:
            return pair_kernel(grid, spec)
        except ValueError as exc:
            raise ConfigError("pair", str(exc)) from None

    def build_initial_state(self, grid: TorusGrid, seed: int | None = None) -> HfbState:
        kind = self.raw["state.kind"].replace("_", "-")
        if kind == "coherent":
            # profile kind comes from state.profile; its parameters from state.*
            spec = dict(self.field_spec("state"))
            spec["kind"] = self.raw.get("state.profile", "constant")
            try:
                phi = sample_field(grid, spec).astype(np.complex128)
            except ValueError as exc:
                raise ConfigError("state", str(exc)) from None
            if "state.n_total" in self.raw:
                target = self._float("state.n_total", 0.0)
                if target < 0:
                    raise ConfigError("state.n_total", "must be nonnegative")
                norm2 = grid.weight * np.vdot(phi, phi).real
                if norm2 == 0 and target > 0:
                    raise ConfigError("state.n_total", "cannot normalize a zero profile")
                if target > 0:
                    phi = phi * np.sqrt(target / norm2)
                else:
                    phi = np.zeros_like(phi)
            return coherent_state(grid, phi)
        if kind == "squeezed-thermal":
            from .meanfield import mean_field_h  # deferred: avoids cycle at import time

            beta = self._float("state.beta", 1.0)
            mu = self._float("state.mu", -1.0)
            squeeze = self._float("state.squeeze", 0.3)
            decay = self._float("state.squeeze_decay", 0.25)
            V = self.build_potential(grid)
            N = grid.n_nodes
            h0 = mean_field_h(grid, V, np.zeros((N, N)), np.zeros((N, N)))
            energies = np.sort(grid.k_squared.ravel()) + np.abs(mu)
            r = squeeze * np.exp(-decay * (energies - energies.min()))
            try:
                return squeezed_thermal_state(grid, h0, beta, r, mu=mu)
            except ValueError as exc:
                raise ConfigError("state", str(exc)) from None
        if kind == "random":
            from .oracle import random_state

            if seed is None:
                raise ConfigError("run.seed", "state.kind = random requires a seed")
            n_total = self._float("state.n_total", 2.0)
            return random_state(grid, seed, n_total=n_total)
        if kind == "snapshot":
            path = self.raw.get("state.file")
            if not path:
                raise ConfigError("state.file", "missing required field")
            state = load_snapshot(path)
            if state.grid != self.build_grid():
                raise ConfigError("state.file", "snapshot grid does not match the configured grid")
            return state
        raise ConfigError("state.kind", f"unknown state kind {self.raw['state.kind']!r}")
