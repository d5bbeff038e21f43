"""Monte Carlo execution of pulse sequences and the readout analysis.

Two modes are offered. ``sampled`` mimics the laboratory: every shot draws its
imperfections, evolves, and is projectively measured. ``analytic`` averages the
exact final populations over the same per-shot imperfections and applies the
detection error as a confusion matrix, so it carries no projection noise.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .fitting import HarmonicFit
from .gates import SETTLE_TIME, Sequence, cz_cnot
from .hilbert import LABELS, RegisterConfig, RegisterState
from .noise import NoiseConfig, confusion_matrix, counter_uniforms, sample_shots
from .pulses import Pulse, PulseContext, PulseKind, RabiConfig, ShotBatch, apply_pulse_batch

MODES = ("sampled", "analytic")

# experiment ids keying independent random streams
EXP_RUN, EXP_TRUTH, EXP_PARITY, EXP_BELL, EXP_TIME = 0, 1, 2, 3, 4
_MEASURE_STREAM = 1 << 63

TRUTH_INPUTS = ("SS", "SD", "DS", "DD")


def cnot_target(inp: str) -> str:
    """|a,b> -> |a, a XOR b> with D as logic 1."""
    a, b = (LABELS.index(c) for c in inp)
    return LABELS[a] + LABELS[a ^ b]


@dataclass(frozen=True, eq=False)
class PopulationEstimate:
    strings: tuple
    probabilities: np.ndarray
    stderr: np.ndarray
    shots: int
    counts: np.ndarray | None = None  # None in analytic mode

    def __getitem__(self, key: str) -> float:
        return float(self.probabilities[self.strings.index(key)])

    def ion_pd(self, ion: int) -> float:
        return float(sum(p for s, p in zip(self.strings, self.probabilities) if s[ion - 1] == "D"))

    def ion_pd_stderr(self, ion: int) -> float:
        p = min(max(self.ion_pd(ion), 0.0), 1.0)
        return float(np.sqrt(p * (1 - p) / self.shots))

    def as_dict(self) -> dict:
        return {s: float(p) for s, p in zip(self.strings, self.probabilities)}


def _estimate(strings, probs, shots, counts=None) -> PopulationEstimate:
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, 1.0)
    stderr = np.sqrt(probs * (1 - probs) / shots)
    return PopulationEstimate(tuple(strings), probs, stderr, int(shots), counts)


# --- propagation --------------------------------------------------------------

def _context(cfg: NoiseConfig, rabi: RabiConfig) -> PulseContext:
    return PulseContext(rabi=rabi, addressing=cfg.addressing, ac_stark=cfg.ac_stark)


def _initial_batch(initial, batch: ShotBatch, config: RegisterConfig, n0: int = 0) -> np.ndarray:
    """Initial tensors for every shot. A qubit string gets the shot's thermal n added to ``n0``."""
    B = len(batch)
    if isinstance(initial, RegisterState):
        if initial.config != config:
            raise ValueError("initial state does not match the register")
        return np.broadcast_to(initial.amplitudes.reshape(config.tensor_shape),
                               (B,) + config.tensor_shape).copy()
    labels = initial.upper() if isinstance(initial, str) else "".join(initial).upper()
    if len(labels) != config.num_ions or any(c not in LABELS for c in labels):
        raise ValueError(f"bad initial qubit string {initial!r}")
    psi = np.zeros((B,) + config.tensor_shape, dtype=complex)
    bits = tuple(LABELS.index(c) for c in labels)
    n = np.minimum(n0 + batch.initial_n, config.n_max)
    psi[(np.arange(B),) + tuple(np.full(B, b) for b in bits) + (n,)] = 1.0
    return psi


def propagate(psi: np.ndarray, pulses, ctx: PulseContext, batch: ShotBatch) -> np.ndarray:
    for p in pulses:
        psi = apply_pulse_batch(psi, p, ctx, batch)
    return psi


def _string_probs(psi: np.ndarray) -> np.ndarray:
    """(B, 2**N) qubit-string probabilities with the bus traced out."""
    B = psi.shape[0]
    p = np.abs(psi.reshape(B, -1, psi.shape[-1])) ** 2
    return p.sum(axis=-1)


def _register_for(initial, num_ions: int, n_max: int) -> RegisterConfig:
    if isinstance(initial, RegisterState):
        return initial.config
    return RegisterConfig(num_ions=num_ions, n_max=n_max)


# --- readout ----------------------------------------------------------------------

def _measure_batch(full_probs: np.ndarray, fock_dim: int, num_ions: int, accuracy: float,
                   u: np.ndarray) -> np.ndarray:
    """Sample basis states and flip readouts; ``u`` is (B, 1 + num_ions). Returns string indices."""
    cum = np.cumsum(full_probs, axis=1)
    cum /= cum[:, -1:]
    idx = np.minimum((cum < u[:, :1]).sum(axis=1), full_probs.shape[1] - 1)
    q = idx // fock_dim
    bits = (q[:, None] >> np.arange(num_ions - 1, -1, -1)) & 1
    flips = u[:, 1:] < (1.0 - accuracy)
    bits = bits ^ flips
    return (bits * (1 << np.arange(num_ions - 1, -1, -1))).sum(axis=1)


def measure_shot(state: RegisterState, cfg: NoiseConfig, u) -> str:
    """Projective readout of one shot; ``u`` holds 1 + num_ions uniforms in [0, 1)."""
    u = np.asarray(u, dtype=float).reshape(1, -1)
    cfgr = state.config
    if u.shape[1] != 1 + cfgr.num_ions:
        raise ValueError("need one uniform for the basis draw plus one per ion")
    k = _measure_batch((np.abs(state.amplitudes) ** 2)[None], cfgr.fock_dim, cfgr.num_ions,
                       cfg.detection_accuracy, u)[0]
    return cfgr.qubit_strings()[k]


def _measurement_uniforms(cfg: NoiseConfig, shots: int, num_ions: int, experiment: int,
                          point: int) -> np.ndarray:
    return counter_uniforms(cfg.seed, experiment | _MEASURE_STREAM, point, np.arange(shots), 1 + num_ions)


def _readout(psi: np.ndarray, cfg: NoiseConfig, config: RegisterConfig, mode: str,
             experiment: int, point: int) -> PopulationEstimate:
    strings = config.qubit_strings()
    shots = psi.shape[0]
    if mode == "analytic":
        p_true = _string_probs(psi).mean(axis=0)
        p_rep = confusion_matrix(cfg.detection_accuracy, config.num_ions) @ p_true
        return _estimate(strings, p_rep, shots)
    full = np.abs(psi.reshape(shots, -1)) ** 2
    u = _measurement_uniforms(cfg, shots, config.num_ions, experiment, point)
    k = _measure_batch(full, config.fock_dim, config.num_ions, cfg.detection_accuracy, u)
    counts = np.bincount(k, minlength=len(strings))
    return _estimate(strings, counts / shots, shots, counts)


def _check_mode(mode: str, shots: int) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if shots < 1:
        raise ValueError("shots must be >= 1")


def run_shots(sequence: Sequence, initial, cfg: NoiseConfig, shots: int = 100,
              mode: str = "sampled", rabi: RabiConfig = RabiConfig(), n0: int = 0,
              n_max: int = 8, experiment: int = EXP_RUN, point: int = 0) -> PopulationEstimate:
    """Repeat ``sequence`` from ``initial`` and estimate the qubit-string populations.

    ``initial`` is a qubit string (bus prepared in ``n0`` plus the shot's
    thermal excitation) or a full :class:`RegisterState` used as given.
    """
    _check_mode(mode, shots)
    config = _register_for(initial, len(cfg.dephasing_sigma), n_max)
    batch = sample_shots(cfg, shots, experiment, point, config.n_max)
    psi = _initial_batch(initial, batch, config, n0)
    psi = propagate(psi, sequence.pulses, _context(cfg, rabi), batch)
    return _readout(psi, cfg, config, mode, experiment, point)


def final_states(sequence: Sequence, initial, cfg: NoiseConfig, shots: int = 1,
                 rabi: RabiConfig = RabiConfig(), n0: int = 0, n_max: int = 8,
                 experiment: int = EXP_RUN, point: int = 0) -> list[RegisterState]:
    """Per-shot final states (exact, no readout)."""
    config = _register_for(initial, len(cfg.dephasing_sigma), n_max)
    batch = sample_shots(cfg, shots, experiment, point, config.n_max)
    psi = propagate(_initial_batch(initial, batch, config, n0), sequence.pulses, _context(cfg, rabi), batch)
    return [RegisterState.from_tensor(config, x) for x in psi]


# --- time scans ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TimeScan:
    times: np.ndarray
    estimates: tuple

    def probability(self, key: str) -> np.ndarray:
        return np.array([e[key] for e in self.estimates])

    def ion_pd(self, ion: int) -> np.ndarray:
        return np.array([e.ion_pd(ion) for e in self.estimates])

    def to_csv(self) -> str:
        strings = self.estimates[0].strings
        num_ions = len(strings[0])
        header = (["t_us"] + [f"P_{s}" for s in strings] + [f"PD_ion{k}" for k in range(1, num_ions + 1)]
                  + [f"SE_{s}" for s in strings] + [f"SE_PD_ion{k}" for k in range(1, num_ions + 1)])
        rows = []
        for t, e in zip(self.times, self.estimates):
            rows.append([t * 1e6] + list(e.probabilities) + [e.ion_pd(k) for k in range(1, num_ions + 1)]
                        + list(e.stderr) + [e.ion_pd_stderr(k) for k in range(1, num_ions + 1)])
        return _csv(header, rows)


def time_scan(sequence: Sequence, initial, cfg: NoiseConfig, num_points: int = 101,
              shots: int = 100, mode: str = "analytic", rabi: RabiConfig = RabiConfig(),
              n0: int = 0, n_max: int = 8, times=None, experiment: int = EXP_TIME) -> TimeScan:
    """Populations after the sequence truncated at each sample time.

    A pulse in progress at time ``t`` is applied with its area scaled by the
    elapsed fraction. Each shot keeps one imperfection draw for all times;
    the projective readouts are independent per time point.
    """
    _check_mode(mode, shots)
    total = sequence.total_duration
    if times is None:
        times = np.linspace(0.0, total, max(int(num_points), 2))
    times = np.clip(np.asarray(times, dtype=float), 0.0, total)
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    config = _register_for(initial, len(cfg.dephasing_sigma), n_max)
    batch = sample_shots(cfg, shots, experiment, 0, config.n_max)
    ctx = _context(cfg, rabi)
    psi = _initial_batch(initial, batch, config, n0)
    starts = sequence.start_times()
    ends = starts + np.array([p.duration for p in sequence.pulses])
    done = 0
    estimates = []
    for i, t in enumerate(times):
        while done < len(sequence.pulses) and ends[done] <= t:
            psi = apply_pulse_batch(psi, sequence.pulses[done], ctx, batch)
            done += 1
        cur = psi
        if done < len(sequence.pulses) and t > starts[done]:
            p = sequence.pulses[done]
            frac = (t - starts[done]) / p.duration
            cur = apply_pulse_batch(psi, p.truncated(frac), ctx, batch)
        estimates.append(_readout(cur, cfg, config, mode, experiment, i))
    return TimeScan(times, tuple(estimates))


# --- parity analysis ---------------------------------------------------------------

def analysis_pulses(phi: float, num_ions: int, rabi: RabiConfig = RabiConfig()) -> list[Pulse]:
    return [Pulse.carrier(ion, np.pi / 2, phi, rabi) for ion in range(1, num_ions + 1)]


@dataclass(frozen=True, eq=False)
class ParityCurve:
    phi: np.ndarray
    parity: np.ndarray
    stderr: np.ndarray
    fit: HarmonicFit

    @property
    def visibility(self) -> float:
        return self.fit.amp_cos_2phi_

    def fit_summary(self) -> dict:
        f = self.fit
        return {
            "offset": f.offset_,
            "amp_cos_phi": f.amp_cos_phi_,
            "amp_cos_2phi": f.amp_cos_2phi_,
            "phase_offsets": [f.phase_cos_phi_, f.phase_cos_2phi_],
        }

    def to_csv(self) -> str:
        return _csv(["phi", "parity", "stderr"], zip(self.phi, self.parity, self.stderr))


def parity_from(est: PopulationEstimate) -> tuple[float, float]:
    """Parity (+1 for an even number of D) and its binomial standard error."""
    sign = np.array([(-1) ** s.count("D") for s in est.strings])
    par = float(sign @ est.probabilities)
    return par, float(np.sqrt(max(1 - par**2, 0.0) / est.shots))


def parity_scan(prep: Sequence, initial, phis, cfg: NoiseConfig, shots: int = 100,
                mode: str = "analytic", rabi: RabiConfig = RabiConfig(),
                settle_time: float = SETTLE_TIME, n0: int = 0, n_max: int = 8,
                experiment: int = EXP_PARITY) -> ParityCurve:
    """Run ``prep``, pi/2 analysis pulses of phase ``phi`` on each ion, and fit the parity."""
    _check_mode(mode, shots)
    phis = np.asarray(phis, dtype=float)
    if phis.size < 8:
        raise ValueError("parity scan needs at least 8 phase points")
    num_ions = initial.config.num_ions if isinstance(initial, RegisterState) else len(initial)
    par, err = [], []
    for i, phi in enumerate(phis):
        seq = extend(prep, analysis_pulses(phi, num_ions, rabi), settle_time)
        est = run_shots(seq, initial, cfg, shots, mode, rabi, n0, n_max, experiment, i)
        p, e = parity_from(est)
        par.append(p)
        err.append(e)
    par = np.array(par)
    fit = HarmonicFit().fit(phis, par)
    return ParityCurve(phis, par, np.array(err), fit)


def extend(seq: Sequence, pulses, settle_time: float = SETTLE_TIME) -> Sequence:
    """Append pulses, inserting settle waits at each change of addressed ion."""
    rot = seq.rotations
    out = list(seq.pulses)
    last = rot[-1].ion if rot else None
    for p in pulses:
        if p.kind != PulseKind.WAIT:
            if last is not None and p.ion != last and settle_time > 0:
                out.append(Pulse.wait(settle_time))
            last = p.ion
        out.append(p)
    return Sequence(tuple(out))


def sackett_fidelity(p_ss: float, p_dd: float, visibility: float) -> float:
    """Bell-state fidelity from the even populations and the parity contrast."""
    for name, v in (("P_SS", p_ss), ("P_DD", p_dd), ("visibility", visibility)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    return (p_ss + p_dd) / 2 + visibility / 2


# --- composite experiments ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TruthTable:
    inputs: tuple
    outputs: tuple
    table: np.ndarray  # table[i, j] = P(output j | input i)
    per_input: dict
    mean_fidelity: float
    shots: int
    mode: str

    def to_csv(self) -> str:
        rows = [[inp] + list(row) for inp, row in zip(self.inputs, self.table)]
        return _csv(["input"] + list(self.outputs), rows)

    def summary(self) -> dict:
        return {"mean_fidelity": self.mean_fidelity, "per_input": self.per_input}


def truth_table(cfg: NoiseConfig, shots: int = 100, mode: str = "analytic",
                rabi: RabiConfig = RabiConfig(), control: int = 1, target: int = 2,
                settle_time: float = SETTLE_TIME, n_max: int = 8) -> TruthTable:
    seq = cz_cnot(control, target, rabi, settle_time)
    rows, per_input = [], {}
    for i, inp in enumerate(TRUTH_INPUTS):
        est = run_shots(seq, inp, cfg, shots, mode, rabi, 0, n_max, EXP_TRUTH, i)
        rows.append(est.probabilities)
        per_input[inp] = est[cnot_target(inp)]
    mean = float(np.mean(list(per_input.values())))
    return TruthTable(TRUTH_INPUTS, TRUTH_INPUTS, np.array(rows), per_input, mean, shots, mode)


def bell_prep(rabi: RabiConfig = RabiConfig(), control: int = 1, target: int = 2,
              settle_time: float = SETTLE_TIME) -> Sequence:
    """Carrier pi/2 taking the control to (|S>+|D>)/sqrt(2), then the CNOT."""
    prep = Pulse.carrier(control, np.pi / 2, 1.5 * np.pi, rabi)
    return Sequence.build((prep,) + cz_cnot(control, target, rabi, 0.0).pulses, settle_time)


@dataclass(frozen=True, eq=False)
class BellResult:
    populations: PopulationEstimate
    parity: ParityCurve
    fidelity: float


def bell_experiment(cfg: NoiseConfig, shots: int = 100, mode: str = "analytic",
                    phis=None, rabi: RabiConfig = RabiConfig(),
                    settle_time: float = SETTLE_TIME) -> BellResult:
    """Entangle |S+D,S>, read the populations, scan the parity, combine into a fidelity."""
    if phis is None:
        phis = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    seq = bell_prep(rabi, settle_time=settle_time)
    pops = run_shots(seq, "SS", cfg, shots, mode, rabi, experiment=EXP_BELL)
    curve = parity_scan(seq, "SS", phis, cfg, shots, mode, rabi, settle_time)
    vis = min(curve.visibility, 1.0)
    return BellResult(pops, curve, sackett_fidelity(pops["SS"], pops["DD"], vis))


# --- output ---------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def population_csv(est: PopulationEstimate) -> str:
    counts = est.counts if est.counts is not None else [""] * len(est.strings)
    rows = [[s, c if c == "" else int(c), p, e]
            for s, c, p, e in zip(est.strings, counts, est.probabilities, est.stderr)]
    return _csv(["state", "count", "probability", "stderr"], rows)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"
