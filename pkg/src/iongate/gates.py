"""Named pulse sequences: composite phase gate, single-ion CNOT, two-ion
Cirac-Zoller CNOT and the deflected-beam spin echo."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import RegisterConfig
from .pulses import (
    AddressingModel,
    Pulse,
    PulseContext,
    PulseKind,
    RabiConfig,
    ShotBatch,
    apply_pulse_batch,
    deflection_phase,
    rabi_profile,
)

SETTLE_TIME = 15e-6
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Sequence:
    """Ordered pulses; retarget settle waits are already materialized as waits."""

    pulses: tuple = ()

    @classmethod
    def build(cls, pulses, settle_time: float = SETTLE_TIME) -> "Sequence":
        """Insert a settle wait wherever the addressed ion changes."""
        out = []
        last_ion = None
        for p in pulses:
            if p.kind != PulseKind.WAIT:
                if last_ion is not None and p.ion != last_ion and settle_time > 0:
                    out.append(Pulse.wait(settle_time))
                last_ion = p.ion
            out.append(p)
        return cls(tuple(out))

    @property
    def total_duration(self) -> float:
        return math.fsum(p.duration for p in self.pulses)

    @property
    def rotations(self) -> tuple:
        return tuple(p for p in self.pulses if p.kind != PulseKind.WAIT)

    @property
    def num_settles(self) -> int:
        return sum(p.kind == PulseKind.WAIT for p in self.pulses)

    def start_times(self) -> np.ndarray:
        d = np.array([p.duration for p in self.pulses])
        return np.concatenate([[0.0], np.cumsum(d)])[:-1]

    def __len__(self):
        return len(self.pulses)

    def __add__(self, other: "Sequence") -> "Sequence":
        return Sequence(self.pulses + other.pulses)


def composite_phase_gate(ion: int, rabi: RabiConfig = RabiConfig()) -> Sequence:
    """Four blue-sideband pulses giving diag(1,-1,-1,-1) on |D,0>,|D,1>,|S,0>,|S,1>."""
    r1 = Pulse.blue(ion, np.pi / SQRT2, np.pi / 2, rabi)
    r2 = Pulse.blue(ion, np.pi, 0.0, rabi)
    return Sequence((r1, r2, r1, r2))


def cnot_single_ion(ion: int, rabi: RabiConfig = RabiConfig()) -> Sequence:
    """Phase gate framed by carrier pi/2 pulses; flips the ion iff the bus is empty."""
    return Sequence(
        (Pulse.carrier(ion, np.pi / 2, np.pi, rabi),)
        + composite_phase_gate(ion, rabi).pulses
        + (Pulse.carrier(ion, np.pi / 2, 0.0, rabi),)
    )


def cz_cnot(control: int = 1, target: int = 2, rabi: RabiConfig = RabiConfig(),
            settle_time: float = SETTLE_TIME) -> Sequence:
    if control == target:
        raise ValueError("control and target must be different ions")
    pulses = (
        (Pulse.blue(control, np.pi, 0.0, rabi),)
        + cnot_single_ion(target, rabi).pulses
        + (Pulse.blue(control, np.pi, np.pi, rabi),)
    )
    return Sequence.build(pulses, settle_time)


def spin_echo(deflection: float, Phi: float, addressing: AddressingModel = AddressingModel(),
              rabi: RabiConfig = RabiConfig(), ion: int = 1) -> Sequence:
    """Deflected pi/2, centered pi at phase ``Phi``, deflected pi/2.

    The framing pulses run at the reduced Rabi rate of the deflected beam and
    are lengthened to keep their area at pi/2.
    """
    dphi = deflection_phase(deflection, addressing).value
    scale = float(rabi_profile(deflection, addressing))
    return Sequence((
        Pulse.carrier(ion, np.pi / 2, dphi + np.pi, rabi, rabi_scale=scale),
        Pulse.carrier(ion, np.pi, Phi, rabi),
        Pulse.carrier(ion, np.pi / 2, dphi, rabi, rabi_scale=scale),
    ))


@dataclass(frozen=True, eq=False)
class GateUnitary:
    matrix: np.ndarray
    config: RegisterConfig
    global_phase_normalized: bool = False

    def restrict(self, indices) -> np.ndarray:
        idx = np.asarray(indices)
        return self.matrix[np.ix_(idx, idx)]

    def unitarity_error(self) -> float:
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def unitary_of(sequence: Sequence, ctx: PulseContext = PulseContext(),
               config: RegisterConfig = RegisterConfig(), normalize_phase: bool = False) -> GateUnitary:
    """Full-register matrix of ``sequence``, column j = image of basis vector j.

    With ``normalize_phase`` the matrix is divided by the phase of its
    largest-magnitude diagonal entry; among equal magnitudes the entry with the
    largest real part wins, so an already-normalized matrix is left as is.
    """
    if not isinstance(ctx, PulseContext):
        raise TypeError("unitary_of needs a fixed PulseContext, not a random noise model")
    dim = config.dim
    psi = np.eye(dim, dtype=complex).reshape((dim,) + config.tensor_shape)
    shots = ShotBatch.stack([ctx.shot] * dim, config.num_ions)
    for p in sequence.pulses:
        psi = apply_pulse_batch(psi, p, ctx, shots)
    u = psi.reshape(dim, dim).T
    if normalize_phase:
        d = np.diag(u)
        mag = np.abs(d)
        ties = np.flatnonzero(mag >= mag.max() - 1e-12)
        ref = d[ties[np.argmax(d[ties].real)]]
        u = u * (np.abs(ref) / ref)
    return GateUnitary(u, config, normalize_phase)
