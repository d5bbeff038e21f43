"""Register Hilbert space: N two-level ions tensored with one truncated bus mode.

Basis order is fixed: the bus number ``n`` runs fastest, then ion N, ..., ion 1
(ion 1 is the most significant digit). Qubit labels are ``S`` (logic 0) and
``D`` (logic 1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LABELS = ("S", "D")


@dataclass(frozen=True)
class RegisterConfig:
    num_ions: int = 2
    n_max: int = 8

    def __post_init__(self):
        if int(self.num_ions) < 1:
            raise ValueError(f"num_ions must be >= 1, got {self.num_ions}")
        if int(self.n_max) < 2:
            raise ValueError(f"n_max must be >= 2, got {self.n_max}")

    @property
    def fock_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2**self.num_ions * self.fock_dim

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return (2,) * self.num_ions + (self.fock_dim,)

    def qubit_strings(self) -> list[str]:
        return ["".join(p) for p in itertools.product(LABELS, repeat=self.num_ions)]


def _parse_qubits(qubits, num_ions: int) -> tuple[int, ...]:
    if isinstance(qubits, str):
        qubits = list(qubits)
    if len(qubits) != num_ions:
        raise ValueError(f"expected {num_ions} qubit labels, got {len(qubits)}")
    out = []
    for q in qubits:
        q = str(q).upper()
        if q not in LABELS:
            raise ValueError(f"qubit label must be S or D, got {q!r}")
        out.append(LABELS.index(q))
    return tuple(out)


def basis_index(qubits: Sequence[str] | str, n: int, config: RegisterConfig = RegisterConfig()) -> int:
    """Flat index of ``|q1...qN, n>``; ``qubits`` is e.g. ``"DS"`` or ``["D", "S"]``."""
    bits = _parse_qubits(qubits, config.num_ions)
    if not 0 <= n <= config.n_max:
        raise ValueError(f"bus number n={n} outside [0, {config.n_max}]")
    q = 0
    for b in bits:
        q = 2 * q + b
    return q * config.fock_dim + int(n)


@dataclass(frozen=True, eq=False)
class RegisterState:
    config: RegisterConfig
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.config.dim:
            raise ValueError(f"state has {amps.size} amplitudes, register needs {self.config.dim}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_tensor(cls, config: RegisterConfig, tensor: np.ndarray) -> "RegisterState":
        return cls(config, np.asarray(tensor).reshape(-1))

    def tensor(self) -> np.ndarray:
        """Writable copy shaped ``(2,)*num_ions + (n_max+1,)``."""
        return self.amplitudes.reshape(self.config.tensor_shape).copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self):
        return f"RegisterState(num_ions={self.config.num_ions}, n_max={self.config.n_max})"


def init_state(qubits: Sequence[str] | str, n: int = 0, config: RegisterConfig = RegisterConfig()) -> RegisterState:
    amps = np.zeros(config.dim, dtype=complex)
    amps[basis_index(qubits, n, config)] = 1.0
    return RegisterState(config, amps)


def product_state(ion_spinors: Sequence[Sequence[complex]], n: int = 0,
                  config: RegisterConfig | None = None) -> RegisterState:
    """Product of single-ion spinors ``(c_S, c_D)`` with the bus in Fock state ``n``."""
    if config is None:
        config = RegisterConfig(num_ions=len(ion_spinors))
    if len(ion_spinors) != config.num_ions:
        raise ValueError("one spinor per ion required")
    vec = np.ones(1, dtype=complex)
    for sp in ion_spinors:
        sp = np.asarray(sp, dtype=complex)
        vec = np.kron(vec, sp / np.linalg.norm(sp))
    fock = np.zeros(config.fock_dim, dtype=complex)
    fock[n] = 1.0
    return RegisterState(config, np.kron(vec, fock))


@dataclass(frozen=True)
class PopulationTable:
    full: np.ndarray  # shape (2**num_ions, n_max+1)
    strings: dict = field(default_factory=dict)
    ion_pd: tuple = ()
    bus: np.ndarray = None

    def __getitem__(self, key: str) -> float:
        return self.strings[key]


def _population_table(probs: np.ndarray, config: RegisterConfig) -> PopulationTable:
    full = probs.reshape(2**config.num_ions, config.fock_dim)
    marg = full.sum(axis=1)
    strings = dict(zip(config.qubit_strings(), (float(p) for p in marg)))
    per_ion = probs.reshape(config.tensor_shape)
    ion_pd = []
    for k in range(config.num_ions):
        other = tuple(a for a in range(config.num_ions + 1) if a != k)
        ion_pd.append(float(per_ion.sum(axis=other)[1]))
    bus = full.sum(axis=0)
    return PopulationTable(full=full, strings=strings, ion_pd=tuple(ion_pd), bus=bus)


def populations(state: RegisterState) -> PopulationTable:
    return _population_table(np.abs(state.amplitudes) ** 2, state.config)


def truncation_leakage(state: RegisterState) -> float:
    """Population sitting in the top Fock level ``n = n_max``."""
    return float(populations(state).bus[-1])


def reduced_purity(state: RegisterState, ion: int) -> float:
    """Tr(rho^2) of one ion's reduced density matrix (bus and other ions traced out)."""
    cfg = state.config
    t = state.amplitudes.reshape(cfg.tensor_shape)
    t = np.moveaxis(t, ion - 1, 0).reshape(2, -1)
    rho = t @ t.conj().T
    return float(np.real(np.trace(rho @ rho)))


@dataclass(frozen=True)
class TrapConfig:
    omega_ax: float
    omega_rad_x: float
    omega_rad_y: float
    lamb_dicke_ax: float = 0.033
    lamb_dicke_rad: float = 0.040


@dataclass(frozen=True)
class ModeSpectrum:
    com_ax: float
    com_rad_x: float
    com_rad_y: float
    breathing: float
    rocking_x: float
    rocking_y: float


def mode_frequencies(trap: TrapConfig) -> ModeSpectrum:
    """Normal-mode angular frequencies of a two-ion crystal."""
    if trap.omega_ax < 0:
        raise ValueError("omega_ax must be non-negative")
    for name in ("omega_rad_x", "omega_rad_y"):
        if getattr(trap, name) <= trap.omega_ax:
            raise ValueError(f"{name} must exceed omega_ax for a real rocking frequency")
    return ModeSpectrum(
        com_ax=trap.omega_ax,
        com_rad_x=trap.omega_rad_x,
        com_rad_y=trap.omega_rad_y,
        breathing=np.sqrt(3.0) * trap.omega_ax,
        rocking_x=float(np.sqrt(trap.omega_rad_x**2 - trap.omega_ax**2)),
        rocking_y=float(np.sqrt(trap.omega_rad_y**2 - trap.omega_ax**2)),
    )
