"""Command-line front end.

Exit status: 0 success, 1 program diagnostics, 2 runtime or usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiment as ex
from .fitting import EchoPhaseFit
from .gates import composite_phase_gate, cz_cnot, spin_echo, unitary_of
from .hilbert import RegisterConfig, basis_index
from .noise import NoiseConfig
from .pulseprog import Diagnostic, ProgramError, parse_program, schedule
from .pulses import RabiConfig

PHASE_GATE_TARGET = np.array([1, -1, -1, -1], dtype=complex)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--noise", metavar="FILE",
                        help="noise config JSON ('tuned' for the bundled config; default ideal)")
    common.add_argument("--shots", type=int, default=100)
    common.add_argument("--mode", choices=ex.MODES, default="sampled")
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    common.add_argument("--out", metavar="FILE", help="CSV output path (JSON sidecar next to it)")

    p = argparse.ArgumentParser(prog="iongate", description="Two-ion Cirac-Zoller CNOT simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="execute a pulse program")
    run.add_argument("program")

    sub.add_parser("truth-table", parents=[common], help="CNOT on the four basis inputs")

    ts = sub.add_parser("time-scan", parents=[common], help="populations vs truncation time")
    ts.add_argument("program", nargs="?")
    ts.add_argument("--input", default="DS", help="initial qubits for the built-in CNOT (default DS)")
    ts.add_argument("--points", type=int, default=101)

    ps = sub.add_parser("parity-scan", parents=[common], help="parity vs analysis phase")
    ps.add_argument("program", nargs="?")
    ps.add_argument("--points", type=int, default=16)

    se = sub.add_parser("spin-echo-scan", parents=[common], help="deflected-beam spin echo vs phase")
    se.add_argument("--deflection", type=float, default=1.0, help="beam deflection in um")
    se.add_argument("--phase-slope", type=float, default=0.0, help="rad per um of deflection")
    se.add_argument("--points", type=int, default=64)

    sub.add_parser("phase-gate-check", help="composite phase gate against diag(1,-1,-1,-1)")
    return p


def _load_noise(args) -> NoiseConfig:
    if args.noise is None:
        cfg = NoiseConfig.ideal()
    elif args.noise == "tuned":
        cfg = NoiseConfig.tuned()
    else:
        cfg = NoiseConfig.load(args.noise)
    if args.seed is not None:
        cfg = NoiseConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    return cfg


def _load_program(path):
    data = Path(path).read_bytes()
    return parse_program(data), hashlib.sha256(data).hexdigest()


def _emit(args, csv_text: str, meta: dict) -> None:
    meta = {"seed": meta.pop("seed"), "shots": args.shots, "mode": args.mode, **meta}
    if args.out:
        out = Path(args.out)
        out.write_text(csv_text, encoding="utf-8")
        out.with_suffix(".json").write_text(ex.dumps(meta), encoding="utf-8")
    else:
        sys.stdout.write(csv_text)


def _check_shots(args):
    if args.shots < 1:
        raise ValueError("--shots must be >= 1")


def cmd_run(args) -> int:
    _check_shots(args)
    program, digest = _load_program(args.program)
    cfg = _load_noise(args).for_ions(program.num_ions)
    seq = schedule(program, addressing=cfg.addressing)
    init = program.init
    reg = RegisterConfig(num_ions=program.num_ions)
    if init.n > reg.n_max:
        raise ProgramError([Diagnostic(init.line, init.column, f"n={init.n} exceeds cutoff {reg.n_max}")])
    est = ex.run_shots(seq, init.qubits, cfg, args.shots, args.mode, n0=init.n)
    _emit(args, ex.population_csv(est), {"seed": cfg.seed, "program_hash": digest,
                                         "total_duration_us": seq.total_duration * 1e6})
    return 0


def cmd_truth_table(args) -> int:
    _check_shots(args)
    cfg = _load_noise(args)
    tt = ex.truth_table(cfg, args.shots, args.mode)
    print(f"mean fidelity {tt.mean_fidelity:.9f}")
    _emit(args, tt.to_csv(), {"seed": cfg.seed, "program_hash": None, **tt.summary()})
    return 0


def _program_or_default(args, default_seq, default_init):
    if args.program:
        program, digest = _load_program(args.program)
        cfg = _load_noise(args).for_ions(program.num_ions)
        return schedule(program, addressing=cfg.addressing), program.init.qubits, program.init.n, cfg, digest
    return default_seq, default_init, 0, _load_noise(args), None


def cmd_time_scan(args) -> int:
    _check_shots(args)
    seq, init, n0, cfg, digest = _program_or_default(args, cz_cnot(1, 2), args.input.upper())
    scan = ex.time_scan(seq, init, cfg, args.points, args.shots, args.mode, n0=n0)
    _emit(args, scan.to_csv(), {"seed": cfg.seed, "program_hash": digest, "input": init})
    return 0


def cmd_parity_scan(args) -> int:
    _check_shots(args)
    seq, init, n0, cfg, digest = _program_or_default(args, ex.bell_prep(), "SS")
    phis = np.linspace(0, 2 * np.pi, args.points, endpoint=False)
    curve = ex.parity_scan(seq, init, phis, cfg, args.shots, args.mode, n0=n0)
    meta = {"seed": cfg.seed, "program_hash": digest, "fit": curve.fit_summary()}
    if digest is None:
        pops = ex.run_shots(seq, init, cfg, args.shots, args.mode, experiment=ex.EXP_BELL)
        vis = min(curve.visibility, 1.0)
        meta["P_SS"], meta["P_DD"] = pops["SS"], pops["DD"]
        meta["sackett_fidelity"] = ex.sackett_fidelity(pops["SS"], pops["DD"], vis)
        print(f"visibility {curve.visibility:.9f} sackett fidelity {meta['sackett_fidelity']:.9f}")
    else:
        print(f"visibility {curve.visibility:.9f}")
    _emit(args, curve.to_csv(), meta)
    return 0


def cmd_spin_echo_scan(args) -> int:
    _check_shots(args)
    if args.points < 3:
        raise ValueError("--points must be >= 3")
    cfg = _load_noise(args).for_ions(1)
    addressing = replace(cfg.addressing, phase_slope=args.phase_slope * 1e6)
    x = args.deflection * 1e-6
    phis = np.linspace(-np.pi / 2, np.pi / 2, args.points, endpoint=False)
    rows = []
    for i, Phi in enumerate(phis):
        est = ex.run_shots(spin_echo(x, Phi, addressing), "S", cfg, args.shots, args.mode, point=i)
        rows.append((Phi, est.ion_pd(1), est.ion_pd_stderr(1)))
    pd = np.array([r[1] for r in rows])
    fit = EchoPhaseFit().fit(phis, pd)
    print(f"fitted phase {fit.delta_:.9f}")
    _emit(args, ex._csv(["Phi", "P_D", "stderr"], rows),
          {"seed": cfg.seed, "program_hash": None, "fitted_phase": fit.delta_, "contrast": fit.contrast_})
    return 0


def cmd_phase_gate_check(args) -> int:
    reg = RegisterConfig(num_ions=1)
    u = unitary_of(composite_phase_gate(1, RabiConfig()), config=reg, normalize_phase=True)
    idx = [basis_index(q, n, reg) for q, n in (("D", 0), ("D", 1), ("S", 0), ("S", 1))]
    diag = np.diag(u.restrict(idx))
    dev = float(np.max(np.abs(u.restrict(idx) - np.diag(PHASE_GATE_TARGET))))
    print("diagonal " + " ".join(f"{z.real:+.9f}{z.imag:+.9f}j" for z in diag))
    print(f"max deviation {dev:.3e}")
    return 0 if dev < 1e-10 else 2


COMMANDS = {
    "run": cmd_run,
    "truth-table": cmd_truth_table,
    "time-scan": cmd_time_scan,
    "parity-scan": cmd_parity_scan,
    "spin-echo-scan": cmd_spin_echo_scan,
    "phase-gate-check": cmd_phase_gate_check,
}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ProgramError as e:
        for d in e.diagnostics:
            print(f"{getattr(args, 'program', '')}:{d}", file=sys.stderr)
        return 1
    except (OSError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
