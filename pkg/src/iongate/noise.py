"""Per-shot imperfection model and its counter-based random source.

Every uniform is a pure function of ``(seed, experiment, point, shot, draw)``,
obtained by chaining the SplitMix64 finalizer over those words. Shots can be
evaluated in any order, in parallel, or vectorized, and still reproduce bit
for bit.
"""

from __future__ import annotations

import json
from importlib import resources
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .hilbert import LABELS
from .pulses import AcStark, AddressingModel, ShotParams, ShotBatch

__all__ = [
    "NoiseConfig",
    "ShotParams",
    "thermal_n",
    "sample_shot",
    "sample_shots",
    "detection_flip",
    "counter_uniforms",
]

INTENSITY_CLIP = 4.0
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseConfig:
    thermal_nbar: float = 0.010101
    dephasing_sigma: tuple = (0.0, 0.0)
    intensity_rms: float = 0.01
    detection_accuracy: float = 0.98
    addressing: AddressingModel = field(default_factory=AddressingModel)
    ac_stark: AcStark = field(default_factory=AcStark)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dephasing_sigma", tuple(float(s) for s in self.dephasing_sigma))
        if not 0 <= self.detection_accuracy <= 1:
            raise ValueError("detection_accuracy must lie in [0, 1]")
        if self.thermal_nbar < 0:
            raise ValueError("thermal_nbar must be non-negative")
        if self.intensity_rms < 0:
            raise ValueError("intensity_rms must be non-negative")
        if any(s < 0 for s in self.dephasing_sigma):
            raise ValueError("dephasing_sigma must be non-negative")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def ideal(cls, seed: int = 0, num_ions: int = 2) -> "NoiseConfig":
        return cls(
            thermal_nbar=0.0,
            dephasing_sigma=(0.0,) * num_ions,
            intensity_rms=0.0,
            detection_accuracy=1.0,
            addressing=AddressingModel(error_on_neighbor=(0.0,) * num_ions),
            ac_stark=AcStark(),
            seed=seed,
        )

    @property
    def is_ideal(self) -> bool:
        return (self.thermal_nbar == 0 and not any(self.dephasing_sigma)
                and self.intensity_rms == 0)

    def for_ions(self, num_ions: int) -> "NoiseConfig":
        """Restrict per-ion parameters to the first ``num_ions`` ions."""
        have = len(self.dephasing_sigma)
        if num_ions == have:
            return self
        if num_ions > have or num_ions > len(self.addressing.error_on_neighbor):
            raise ValueError(f"noise config describes {have} ions, register has {num_ions}")
        addressing = replace(self.addressing, error_on_neighbor=self.addressing.error_on_neighbor[:num_ions])
        return replace(self, dephasing_sigma=self.dephasing_sigma[:num_ions], addressing=addressing)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dephasing_sigma"] = list(self.dephasing_sigma)
        d["addressing"]["error_on_neighbor"] = list(self.addressing.error_on_neighbor)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseConfig":
        if not isinstance(data, dict):
            raise ValueError("noise config must be a JSON object")
        _reject_unknown(data, cls, "noise config")
        kw = dict(data)
        if "addressing" in kw:
            _reject_unknown(kw["addressing"], AddressingModel, "addressing")
            kw["addressing"] = AddressingModel(**kw["addressing"])
        if "ac_stark" in kw:
            _reject_unknown(kw["ac_stark"], AcStark, "ac_stark")
            kw["ac_stark"] = AcStark(**kw["ac_stark"])
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "NoiseConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "NoiseConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def tuned(cls) -> "NoiseConfig":
        """Bundled configuration tuned so the gate and Bell fidelities land in their target bands."""
        text = resources.files("iongate").joinpath("data/tuned_noise.json").read_text(encoding="utf-8")
        return cls.from_json(text)


def _reject_unknown(data, cls, where: str) -> None:
    if not isinstance(data, dict):
        raise ValueError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown key(s) in {where}: {', '.join(unknown)}")


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_uniforms(seed: int, experiment: int, point: int, shots, draws: int) -> np.ndarray:
    """Uniforms in (0, 1) of shape ``(len(shots), draws)``, keyed per (shot, draw)."""
    shots = np.asarray(shots, dtype=np.uint64).reshape(-1, 1)
    draw = np.arange(draws, dtype=np.uint64).reshape(1, -1)
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(int(seed) & _MASK64) + _GOLDEN)
        for word in (experiment, point):
            h = _mix(h ^ (np.uint64(int(word) & _MASK64) + _GOLDEN))
        h = _mix(h ^ (shots + _GOLDEN))
        h = _mix(h ^ (draw + _GOLDEN))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def shot_uniforms(seed: int, shot: int, draws: int, experiment: int = 0, point: int = 0) -> np.ndarray:
    return counter_uniforms(seed, experiment, point, [shot], draws)[0]


def thermal_n(nbar: float, u, n_max: int = 8):
    """Inverse-CDF draw from p(n) = nbar^n / (1+nbar)^(n+1), clipped at ``n_max``.

    Accepts a scalar or an array of uniforms.
    """
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    u = np.asarray(u, dtype=float)
    if nbar == 0:
        n = np.zeros(u.shape, dtype=int)
    else:
        # P(N <= n) = 1 - q^(n+1)
        q = nbar / (1.0 + nbar)
        n = np.clip(np.floor(np.log1p(-u) / np.log(q)), 0, n_max).astype(int)
    return int(n) if n.ndim == 0 else n


def _truncated_normal(u):
    lo, hi = ndtr(-INTENSITY_CLIP), ndtr(INTENSITY_CLIP)
    return ndtri(lo + u * (hi - lo))


def sample_shots(cfg: NoiseConfig, shots: int, experiment: int = 0, point: int = 0,
                 n_max: int = 8, start: int = 0) -> ShotBatch:
    """Imperfections for shots ``start .. start+shots-1``.

    Draw layout per shot: 0 thermal bus, 1 intensity, 2.. one detuning per ion.
    """
    num_ions = len(cfg.dephasing_sigma)
    if cfg.is_ideal:
        return ShotBatch(np.zeros(shots, dtype=int), np.zeros((shots, num_ions)), np.ones(shots))
    u = counter_uniforms(cfg.seed, experiment, point, np.arange(start, start + shots), 2 + num_ions)
    n = thermal_n(cfg.thermal_nbar, u[:, 0], n_max)
    intensity = 1.0 + cfg.intensity_rms * _truncated_normal(u[:, 1]) if cfg.intensity_rms else np.ones(shots)
    sigma = np.asarray(cfg.dephasing_sigma)
    detuning = np.where(sigma > 0, sigma * ndtri(u[:, 2:]), 0.0)
    return ShotBatch(n, detuning, np.asarray(intensity, dtype=float))


def sample_shot(cfg: NoiseConfig, shot_index: int, experiment: int = 0, point: int = 0,
                n_max: int = 8) -> ShotParams:
    b = sample_shots(cfg, 1, experiment, point, n_max, start=shot_index)
    return ShotParams(int(b.initial_n[0]), tuple(b.detuning[0]), float(b.intensity_factor[0]))


def detection_flip(outcome: str, cfg: NoiseConfig, u) -> str:
    """Flip each ion's readout independently with probability 1 - accuracy."""
    err = 1.0 - cfg.detection_accuracy
    out = []
    for label, x in zip(outcome, u):
        if x < err:
            label = LABELS[1 - LABELS.index(label)]
        out.append(label)
    return "".join(out)


def confusion_matrix(accuracy: float, num_ions: int) -> np.ndarray:
    """``M[reported, true]`` over qubit strings for independent symmetric flips."""
    one = np.array([[accuracy, 1 - accuracy], [1 - accuracy, accuracy]])
    m = np.ones((1, 1))
    for _ in range(num_ions):
        m = np.kron(m, one)
    return m
