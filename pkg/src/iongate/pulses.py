"""Laser-pulse unitaries acting on a register state.

Two elementary rotations are provided. In the ``(|S>, |D>)`` basis of the
coupled pair both use

    [[cos(t/2),               -1j*exp(+1j*phi)*sin(t/2)],
     [-1j*exp(-1j*phi)*sin(t/2), cos(t/2)              ]]

The carrier acts on ``{|S,n>, |D,n>}`` for every ``n`` with the same angle.
The blue sideband acts on ``{|S,n>, |D,n+1>}`` with angle ``theta*sqrt(n+1)``;
``|D,0>`` and ``|S,n_max>`` are left untouched.

All kernels work on a batched tensor ``(B, 2, ..., 2, n_max+1)`` so that many
Monte Carlo shots can be propagated at once. The single-state wrappers
(:func:`carrier`, :func:`blue_sideband`, :func:`apply_pulse`) use a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .hilbert import RegisterState

TWO_PI = 2.0 * np.pi


class PulseKind(str, Enum):
    CARRIER = "carrier"
    BLUE = "blue"
    WAIT = "wait"


@dataclass(frozen=True)
class RabiConfig:
    """Rabi angular frequencies (rad/s) per ion, indexed from ion 1."""

    carrier_rabi: tuple = (TWO_PI * 35.5e3, TWO_PI * 35.5e3)
    sideband_rabi: tuple = (np.pi / 95e-6, np.pi / 95e-6)

    def __post_init__(self):
        object.__setattr__(self, "carrier_rabi", tuple(float(x) for x in self.carrier_rabi))
        object.__setattr__(self, "sideband_rabi", tuple(float(x) for x in self.sideband_rabi))
        if any(x <= 0 for x in self.carrier_rabi + self.sideband_rabi):
            raise ValueError("Rabi frequencies must be positive")

    def rate(self, kind: PulseKind, ion: int) -> float:
        table = self.carrier_rabi if kind == PulseKind.CARRIER else self.sideband_rabi
        if not 1 <= ion <= len(table):
            raise ValueError(f"no {kind.value} Rabi frequency configured for ion {ion}")
        return table[ion - 1]


@dataclass(frozen=True)
class Pulse:
    kind: PulseKind
    ion: int | None = None
    theta: float = 0.0
    phi: float = 0.0
    duration: float = 0.0
    rabi_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if self.duration < 0:
            raise ValueError(f"negative pulse duration {self.duration}")
        if self.kind == PulseKind.WAIT:
            if self.theta != 0:
                raise ValueError("wait pulses carry a duration only")
            return
        if self.ion is None or self.ion < 1:
            raise ValueError(f"invalid ion index {self.ion}")
        if self.theta < 0:
            raise ValueError(f"rotation angle must be non-negative, got {self.theta}")
        if not self.rabi_scale > 0:
            raise ValueError("rabi_scale must be positive")

    @classmethod
    def make(cls, kind, ion: int, theta: float, phi: float = 0.0,
             rabi: RabiConfig = RabiConfig(), rabi_scale: float = 1.0) -> "Pulse":
        """Build a rotation pulse; its duration is ``theta / (rabi_scale * Omega)``."""
        kind = PulseKind(kind)
        if theta < 0:
            raise ValueError(f"rotation angle must be non-negative, got {theta}")
        duration = theta / (rabi_scale * rabi.rate(kind, ion))
        return cls(kind, ion, float(theta), float(phi), duration, rabi_scale)

    @classmethod
    def carrier(cls, ion, theta, phi=0.0, rabi=RabiConfig(), rabi_scale=1.0):
        return cls.make(PulseKind.CARRIER, ion, theta, phi, rabi, rabi_scale)

    @classmethod
    def blue(cls, ion, theta, phi=0.0, rabi=RabiConfig(), rabi_scale=1.0):
        return cls.make(PulseKind.BLUE, ion, theta, phi, rabi, rabi_scale)

    @classmethod
    def wait(cls, duration: float) -> "Pulse":
        return cls(PulseKind.WAIT, None, 0.0, 0.0, float(duration))

    def truncated(self, fraction: float) -> "Pulse":
        """The first ``fraction`` of this pulse (same Rabi rate, shorter area)."""
        fraction = min(max(fraction, 0.0), 1.0)
        return replace(self, theta=self.theta * fraction, duration=self.duration * fraction)


@dataclass(frozen=True)
class AddressingModel:
    """Crosstalk onto non-addressed ions and the focused-beam geometry.

    ``error_on_neighbor[k]`` is the Rabi-frequency ratio seen by the other
    ions while ion ``k+1`` is addressed. ``profile`` selects whether
    ``beam_waist`` describes the Rabi-frequency profile directly (``"rabi"``)
    or the 1/e intensity radius (``"intensity"``, Rabi ~ sqrt(intensity)).
    """

    error_on_neighbor: tuple = (0.069, 0.029)
    crosstalk_phase: float = 0.0
    beam_waist: float = 2.5e-6
    ion_spacing: float = 4.90e-6
    phase_slope: float = 0.0
    linear_range: float = 2.0e-6
    profile: str = "rabi"

    def __post_init__(self):
        object.__setattr__(self, "error_on_neighbor", tuple(float(e) for e in self.error_on_neighbor))
        if any(not 0 <= e < 1 for e in self.error_on_neighbor):
            raise ValueError("addressing error ratios must lie in [0, 1)")
        if self.profile not in ("rabi", "intensity"):
            raise ValueError(f"unknown beam profile {self.profile!r}")
        if self.beam_waist <= 0:
            raise ValueError("beam_waist must be positive")

    @classmethod
    def ideal(cls) -> "AddressingModel":
        return cls(error_on_neighbor=(0.0, 0.0))

    def epsilon(self, ion: int) -> float:
        if not 1 <= ion <= len(self.error_on_neighbor):
            raise ValueError(f"no addressing error configured for ion {ion}")
        return self.error_on_neighbor[ion - 1]


@dataclass(frozen=True)
class AcStark:
    shift: float = 0.0  # Hz, residual light shift during sideband pulses
    compensated: bool = True

    @property
    def effective_shift(self) -> float:
        return 0.0 if self.compensated else self.shift


@dataclass(frozen=True)
class ShotParams:
    """Random realization of the imperfections for one experimental cycle."""

    initial_n: int = 0
    detuning: tuple = ()  # Hz per ion; empty means zero for every ion
    intensity_factor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "detuning", tuple(float(d) for d in self.detuning))
        if self.initial_n < 0:
            raise ValueError("initial_n must be non-negative")
        if not self.intensity_factor > 0:
            raise ValueError("intensity_factor must be positive")


@dataclass(frozen=True, eq=False)
class ShotBatch:
    """Column-stacked :class:`ShotParams` for vectorized propagation."""

    initial_n: np.ndarray
    detuning: np.ndarray  # (B, num_ions), Hz
    intensity_factor: np.ndarray

    @classmethod
    def stack(cls, shots, num_ions: int) -> "ShotBatch":
        shots = list(shots)
        det = np.zeros((len(shots), num_ions))
        for i, s in enumerate(shots):
            if s.detuning:
                if len(s.detuning) != num_ions:
                    raise ValueError("detuning must list one value per ion")
                det[i] = s.detuning
        return cls(
            initial_n=np.array([s.initial_n for s in shots], dtype=int),
            detuning=det,
            intensity_factor=np.array([s.intensity_factor for s in shots], dtype=float),
        )

    def __len__(self):
        return len(self.initial_n)

    def take(self, idx) -> "ShotBatch":
        return ShotBatch(self.initial_n[idx], self.detuning[idx], self.intensity_factor[idx])


@dataclass(frozen=True)
class PulseContext:
    """Everything a pulse needs besides the state. Defaults describe an ideal run."""

    rabi: RabiConfig = field(default_factory=RabiConfig)
    addressing: AddressingModel = field(default_factory=AddressingModel.ideal)
    shot: ShotParams = field(default_factory=ShotParams)
    ac_stark: AcStark = field(default_factory=AcStark)


# --- batched tensor kernels -------------------------------------------------

def _bcast(x, ndim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x
    return x.reshape(x.shape + (1,) * (ndim - x.ndim))


def _check_ion(psi: np.ndarray, ion: int) -> None:
    if not 1 <= ion <= psi.ndim - 2:
        raise ValueError(f"ion index {ion} outside register of {psi.ndim - 2} ions")


def rotate_carrier(psi: np.ndarray, ion: int, theta, phi) -> np.ndarray:
    """Carrier rotation on a batched tensor; ``theta``/``phi`` scalar or shape (B,)."""
    _check_ion(psi, ion)
    out = psi.copy()
    v = np.moveaxis(out, ion, 1)
    a, b = v[:, 0].copy(), v[:, 1].copy()
    half = _bcast(theta, a.ndim) / 2.0
    c, s = np.cos(half), np.sin(half)
    e = np.exp(1j * _bcast(phi, a.ndim))
    v[:, 0] = c * a - 1j * e * s * b
    v[:, 1] = -1j * np.conj(e) * s * a + c * b
    return out


def rotate_blue(psi: np.ndarray, ion: int, theta, phi) -> np.ndarray:
    """Blue-sideband rotation; ``theta`` is the nominal n=0 angle."""
    _check_ion(psi, ion)
    out = psi.copy()
    v = np.moveaxis(out, ion, 1)
    a = v[:, 0, ..., :-1].copy()
    b = v[:, 1, ..., 1:].copy()
    ladder = np.sqrt(np.arange(1, a.shape[-1] + 1))
    half = _bcast(theta, a.ndim) * ladder / 2.0
    c, s = np.cos(half), np.sin(half)
    e = np.exp(1j * _bcast(phi, a.ndim))
    v[:, 0, ..., :-1] = c * a - 1j * e * s * b
    v[:, 1, ..., 1:] = -1j * np.conj(e) * s * a + c * b
    return out


def phase_on_d(psi: np.ndarray, ion: int, phase) -> np.ndarray:
    """Multiply every ``|D>`` component of ``ion`` by ``exp(-1j*phase)``."""
    _check_ion(psi, ion)
    out = psi.copy()
    v = np.moveaxis(out, ion, 1)
    v[:, 1] *= np.exp(-1j * _bcast(phase, v.ndim - 1))
    return out


_ROTATIONS = {PulseKind.CARRIER: rotate_carrier, PulseKind.BLUE: rotate_blue}


def apply_pulse_batch(psi: np.ndarray, pulse: Pulse, ctx: PulseContext,
                      shots: ShotBatch | None = None) -> np.ndarray:
    """Propagate a batch ``(B, 2, ..., n_max+1)`` through one pulse.

    Order: addressed-ion rotation, neighbor crosstalk rotations, uncompensated
    light-shift phase (sideband pulses), then the per-ion detuning phase
    accumulated over the pulse duration.
    """
    num_ions = psi.ndim - 2
    if shots is None:
        shots = ShotBatch.stack([ctx.shot] * psi.shape[0], num_ions)
    if pulse.kind != PulseKind.WAIT:
        _check_ion(psi, pulse.ion)
        rot = _ROTATIONS[pulse.kind]
        theta = pulse.theta * shots.intensity_factor
        psi = rot(psi, pulse.ion, theta, pulse.phi)
        if num_ions > 1:
            eps = ctx.addressing.epsilon(pulse.ion)
            if eps:
                for other in range(1, num_ions + 1):
                    if other != pulse.ion:
                        psi = rot(psi, other, theta * eps, pulse.phi + ctx.addressing.crosstalk_phase)
        shift = ctx.ac_stark.effective_shift
        if pulse.kind == PulseKind.BLUE and shift:
            psi = phase_on_d(psi, pulse.ion, TWO_PI * shift * pulse.duration)
    if pulse.duration and np.any(shots.detuning):
        for ion in range(1, num_ions + 1):
            det = shots.detuning[:, ion - 1]
            if np.any(det):
                psi = phase_on_d(psi, ion, TWO_PI * det * pulse.duration)
    return psi


# --- single-state wrappers --------------------------------------------------

def _batch(state: RegisterState) -> np.ndarray:
    return state.amplitudes.reshape((1,) + state.config.tensor_shape)


def _unbatch(state: RegisterState, psi: np.ndarray) -> RegisterState:
    return RegisterState(state.config, psi[0].reshape(-1))


def carrier(state: RegisterState, ion: int, theta: float, phi: float = 0.0) -> RegisterState:
    return _unbatch(state, rotate_carrier(_batch(state), ion, theta, phi))


def blue_sideband(state: RegisterState, ion: int, theta: float, phi: float = 0.0) -> RegisterState:
    return _unbatch(state, rotate_blue(_batch(state), ion, theta, phi))


def apply_pulse(state: RegisterState, pulse: Pulse, ctx: PulseContext = PulseContext()) -> RegisterState:
    return _unbatch(state, apply_pulse_batch(_batch(state), pulse, ctx))


# --- addressing-beam geometry -----------------------------------------------

def rabi_profile(deflection: float, model: AddressingModel = AddressingModel()) -> float:
    """Relative Rabi frequency Omega(x)/Omega(0) of the Gaussian addressing beam."""
    x2 = (np.asarray(deflection, dtype=float) / model.beam_waist) ** 2
    if model.profile == "intensity":
        x2 = x2 / 2.0
    return np.exp(-x2)


class DeflectionPhase(NamedTuple):
    value: float
    in_linear_range: bool


def deflection_phase(deflection: float, model: AddressingModel = AddressingModel()) -> DeflectionPhase:
    """Optical phase picked up by a deflected beam; linear only within ``linear_range``."""
    return DeflectionPhase(model.phase_slope * deflection, abs(deflection) <= model.linear_range)
