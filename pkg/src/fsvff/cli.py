"""Command-line entry point.

Subcommands: neig, train, fastforward, spectrum, qpe, qee, noise-sweep.
Every run writes a manifest (resolved config, seed, versions, input hashes)
next to its CSV/JSON artifacts; exact-mode runs are byte-reproducible per
seed. Exit codes: 0 ok, 2 invalid config, 3 numerical failure, 64 usage.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import gramian, pipelines
from .ansatz import (
    FsvffAnsatz,
    format_ansatz,
    hardware_xy_ansatz,
    layered_ansatz,
    parse_ansatz,
    single_z_diagonal,
)
from .config import ExperimentConfig, load_config, validate
from .cost import TrainingSet, cost_eval, preparation_for_bits
from .exceptions import ConfigError, FsvffError
from .hamiltonian import parse_pauli_sum
from .noise import default_model, model_from_file, resilience_sweep
from .optimizer import gradient_descent, init_params, adaptive_structure_search
from .statevector import Circuit, basis_state
from .utils import derive_seed
from . import fastforward as ffwd
from . import spectroscopy as spx

SUBCOMMANDS = (
    "neig",
    "train",
    "fastforward",
    "spectrum",
    "qpe",
    "qee",
    "noise-sweep",
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _manifest(outdir, subcommand, cfg, args, input_files):
    hashes = {}
    for name, path in input_files.items():
        try:
            hashes[name] = _sha256(Path(path).read_text())
        except OSError:
            hashes[name] = "unreadable"
    _write_json(
        outdir / "manifest.json",
        {
            "subcommand": subcommand,
            "config": cfg.echo(),
            "flags": {k: v for k, v in vars(args).items() if v is not None},
            "seed": cfg.seed,
            "versions": {
                "fsvff": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
            },
            "input_hashes": hashes,
        },
    )


def _common_flags(p):
    p.add_argument("--config", help="INI or JSON experiment file")
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--exact", action="store_true", help="force exact mode")
    p.add_argument("--output-dir")
    p.add_argument("--hamiltonian-file")
    p.add_argument("--noise-model")
    p.add_argument("--ansatz-in")
    p.add_argument("--ansatz-out")
    p.add_argument("--skip-neig", action="store_true")
    p.add_argument("--builtin", choices=["xy", "fermi_hubbard"])
    p.add_argument("--n", type=int, help="XY chain length")
    p.add_argument("--sites", type=int, help="Hubbard sites")
    p.add_argument("--j", type=float)
    p.add_argument("--u", type=float)
    p.add_argument("--state", help="initial basis state bits")
    p.add_argument("--dt", type=float)
    p.add_argument("--trotter-order", choices=["first", "second"])
    p.add_argument("--substeps", type=int)
    p.add_argument("--exact-u", action="store_true", help="dense exp(-iH dt) step")


def build_parser():
    parser = argparse.ArgumentParser(prog="fsvff")
    sub = parser.add_subparsers(dest="subcommand")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        _common_flags(p)
        if name == "neig":
            p.add_argument("--k-max", type=int, default=24)
            p.add_argument("--threshold", type=float, default=1e-6)
        elif name == "train":
            p.add_argument(
                "--ansatz", default="auto", help="hardware-xy | layered:<L> | auto"
            )
            p.add_argument("--cost", choices=["global", "local", "randomized"])
            p.add_argument("--n-eig", type=int)
            p.add_argument("--t-max", type=float)
            p.add_argument("--batch", type=int)
            p.add_argument("--max-iters", type=int)
            p.add_argument("--lr", type=float)
            p.add_argument("--momentum", type=float)
            p.add_argument("--target-cost", type=float)
            p.add_argument("--search", action="store_true",
                           help="adaptive structure search")
        elif name == "fastforward":
            p.add_argument("--steps", type=int, default=100)
            p.add_argument(
                "--reference", choices=["exact_h", "iterated_trotter"],
                default="iterated_trotter",
            )
            p.add_argument("--delta", type=float, action="append")
            p.add_argument("--n-eig", type=int)
        elif name == "spectrum":
            p.add_argument("--threshold", type=float, default=0.02)
        elif name == "qpe":
            p.add_argument("--bits", type=int, default=3)
            p.add_argument("--basis-state", required=True)
            p.add_argument("--standard", action="store_true",
                           help="controlled-U^(2^j) instead of the diagonal")
        elif name == "qee":
            p.add_argument("--basis-state", required=True, action="append")
        elif name == "noise-sweep":
            p.add_argument("--grid-lo", type=float)
            p.add_argument("--grid-hi", type=float)
            p.add_argument("--grid-points", type=int, default=100)
    return parser


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig({})
    ov = cfg.raw
    def put(section, key, value):
        if value is not None:
            ov.setdefault(section, {})[key] = str(value)

    put("run", "seed", args.seed)
    put("run", "shots", None if args.exact else args.shots)
    if args.exact:
        ov.setdefault("run", {})["shots"] = ""
    put("run", "output_dir", args.output_dir)
    put("hamiltonian", "builtin", args.builtin)
    put("hamiltonian", "n", args.n)
    put("hamiltonian", "sites", args.sites)
    put("hamiltonian", "j", args.j)
    put("hamiltonian", "u", args.u)
    put("hamiltonian", "file", args.hamiltonian_file)
    put("state", "bits", args.state)
    put("evolution", "dt", args.dt)
    put("evolution", "order", args.trotter_order)
    put("evolution", "substeps", args.substeps)
    if args.exact_u:
        ov.setdefault("evolution", {})["exact"] = "true"
    put("noise", "model", args.noise_model)
    for attr, sec_key in (
        ("cost", ("cost", "variant")),
        ("n_eig", ("cost", "n_eig")),
        ("t_max", ("cost", "t_max")),
        ("batch", ("cost", "batch")),
        ("max_iters", ("optimizer", "max_iters")),
        ("lr", ("optimizer", "learning_rate")),
        ("momentum", ("optimizer", "momentum")),
        ("target_cost", ("optimizer", "target_cost")),
    ):
        if hasattr(args, attr):
            put(sec_key[0], sec_key[1], getattr(args, attr))
    if getattr(args, "search", False):
        ov.setdefault("structure", {})["enabled"] = "true"
    return cfg


def _build_hamiltonian(cfg):
    path = cfg.get("hamiltonian", "file")
    if path:
        return parse_pauli_sum(Path(path).read_text())
    builtin = cfg.get("hamiltonian", "builtin")
    if builtin == "xy":
        return pipelines.build_builtin_hamiltonian("xy", n=cfg.geti("hamiltonian", "n"))
    return pipelines.build_builtin_hamiltonian(
        "fermi_hubbard",
        sites=cfg.geti("hamiltonian", "sites") or 2,
        j=cfg.getf("hamiltonian", "j"),
        u=cfg.getf("hamiltonian", "u"),
    )


def _build_ts(cfg, n_eig=1) -> TrainingSet:
    h = _build_hamiltonian(cfg)
    bits = cfg.get("state", "bits")
    if len(bits) != h.n_qubits:
        raise ConfigError(
            f"state {bits!r} has {len(bits)} bits, Hamiltonian has {h.n_qubits} qubits"
        )
    return pipelines.make_training_set(
        h,
        bits,
        cfg.delta_t,
        n_eig,
        trotter=cfg.trotter_spec(),
        exact_step=cfg.getb("evolution", "exact"),
    )


def _resolve_neig(cfg, ts, args) -> int:
    n_eig_cfg = cfg.get("cost", "n_eig")
    if args.skip_neig:
        if n_eig_cfg in ("", "auto"):
            if cfg.get("cost", "variant") == "randomized":
                ts.n_eig = 1
                return 1
            raise ConfigError("--skip-neig needs an explicit n_eig for this cost")
        ts.n_eig = int(n_eig_cfg)
        return ts.n_eig
    if n_eig_cfg not in ("", "auto"):
        ts.n_eig = int(n_eig_cfg)
        return ts.n_eig
    res = pipelines.detect_neig(ts, seed=cfg.seed)
    return res.n_eig


def _make_ansatz(cfg, args, ts) -> FsvffAnsatz:
    n = ts.psi0.n_qubits
    dt = cfg.delta_t
    kind = getattr(args, "ansatz", "auto") or "auto"
    if args.ansatz_in:
        return parse_ansatz(Path(args.ansatz_in).read_text())
    if kind == "auto":
        kind = "hardware-xy" if n == 2 else "layered:3"
    if kind == "hardware-xy":
        if n != 2:
            raise ConfigError("hardware-xy ansatz is two-qubit only")
        return init_params(hardware_xy_ansatz(dt), seed=cfg.seed)
    if kind.startswith("layered"):
        layers = int(kind.split(":")[1]) if ":" in kind else 2
        return init_params(layered_ansatz(n, layers, dt), seed=cfg.seed)
    raise ConfigError(f"unknown ansatz {kind!r}")


def _outdir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_files(args):
    files = {}
    for attr in ("config", "ansatz_in", "hamiltonian_file", "noise_model"):
        v = getattr(args, attr, None)
        if v:
            files[attr] = v
    return files


def cmd_neig(cfg, args):
    out = _outdir(cfg)
    ts = _build_ts(cfg)
    res = gramian.find_neig(
        ts.u_step, ts.psi0, args.k_max, args.threshold, "exact", seed=cfg.seed
    )
    sampled = None
    if cfg.shots:
        sampled = gramian.find_neig(
            ts.u_step,
            ts.psi0,
            args.k_max,
            args.threshold,
            "hadamard",
            cfg.shots,
            cfg.seed,
        )
    rows = []
    n_rows = max(len(res.determinants), len(sampled.determinants) if sampled else 0)
    for i in range(n_rows):
        det_e = res.determinants[i] if i < len(res.determinants) else None
        det_s = (
            sampled.determinants[i]
            if sampled and i < len(sampled.determinants)
            else None
        )
        decision = "stop" if i == len(res.determinants) - 1 else "continue"
        rows.append((i + 1, det_e, det_s, decision))
    _write_csv(out / "neig.csv", ["k", "det_exact", "det_sampled", "decision"], rows)
    payload = {
        "n_eig": res.n_eig,
        "threshold": res.threshold,
        "method": res.method,
        "determinants": res.determinants,
    }
    if sampled:
        payload["n_eig_sampled"] = sampled.n_eig
        payload["threshold_sampled"] = sampled.threshold
    _write_json(out / "n_eig.json", payload)
    print(f"n_eig = {res.n_eig}")
    return EXIT_OK


def cmd_train(cfg, args):
    out = _outdir(cfg)
    variant = cfg.get("cost", "variant")
    ts = _build_ts(cfg)
    _resolve_neig(cfg, ts, args)
    ansatz = _make_ansatz(cfg, args, ts)
    t0 = time.perf_counter()
    ss_cfg = cfg.structure_config()
    kwargs = dict(
        cost_variant=variant,
        shots=cfg.shots,
        t_max=cfg.getf("cost", "t_max"),
        batch=cfg.geti("cost", "batch"),
        bias=cfg.getf("cost", "bias"),
    )
    if ss_cfg is not None:
        result = adaptive_structure_search(
            ts, ansatz, cfg.optimizer_config(), ss_cfg, **kwargs
        )
    else:
        result = gradient_descent(ts, ansatz, cfg.optimizer_config(), **kwargs)
    wall = time.perf_counter() - t0
    trained = FsvffAnsatz(
        result.final_circuit,
        ansatz.d.with_gammas(result.gamma_opt),
        result.theta_opt,
    )
    text = format_ansatz(trained)
    (out / "ansatz.txt").write_text(text)
    if args.ansatz_out:
        Path(args.ansatz_out).write_text(text)
    rows = []
    for i, c in enumerate(result.cost_trace):
        gnorm = result.grad_norms[i] if i < len(result.grad_norms) else None
        rows.append(
            (i, c if cfg.shots is None else None, c if cfg.shots else None, gnorm)
        )
    _write_csv(
        out / "cost_trace.csv",
        ["iteration", "cost_exact", "cost_shot", "grad_norm"],
        rows,
    )
    _write_json(
        out / "result.json",
        {
            "config": cfg.echo(),
            "final_cost": result.final_cost,
            "accepted_rounds": result.accepted_rounds,
            "iterations": len(result.cost_trace),
            "cost_trace": result.cost_trace,
            "ansatz": text,
            "seed": cfg.seed,
            "wall_time_s": wall,
        },
    )
    print(f"final cost = {result.final_cost:.6e} ({len(result.cost_trace)} iterations)")
    return EXIT_OK


def cmd_fastforward(cfg, args):
    out = _outdir(cfg)
    if not args.ansatz_in:
        raise ConfigError("fastforward needs --ansatz-in")
    ansatz = parse_ansatz(Path(args.ansatz_in).read_text())
    ts = _build_ts(cfg)
    if args.n_eig:
        ts.n_eig = args.n_eig
    elif not args.skip_neig:
        pipelines.detect_neig(ts, seed=cfg.seed)
    model = None
    path = "pure"
    if cfg.get("noise", "model"):
        model = model_from_file(cfg.get("noise", "model"))
        path = "noisy"
    curve = ffwd.fidelity_curve(ansatz, ts, args.steps, args.reference, path, model)
    rows = [
        (int(n), float(f), curve.reference, curve.path)
        for n, f in zip(curve.steps, curve.fidelity)
    ]
    _write_csv(out / "curve.csv", ["N", "fidelity", "reference", "path"], rows)
    deltas = args.delta or [0.1, 0.2]
    report = {"deltas": {}, "path": path}
    trot_curve = None
    if path == "noisy":
        trot_curve = ffwd.iterated_trotter_curve(ts, args.steps, "noisy", model)
        _write_csv(
            out / "trotter_curve.csv",
            ["N", "fidelity", "reference", "path"],
            [
                (int(n), float(f), trot_curve.reference, trot_curve.path)
                for n, f in zip(trot_curve.steps, trot_curve.fidelity)
            ],
        )
    for d in deltas:
        t_ff = ffwd.high_fidelity_time(curve, d)
        entry = {"t_ff": t_ff}
        if trot_curve is not None:
            t_tr = ffwd.high_fidelity_time(trot_curve, d)
            entry["t_trot"] = t_tr
            entry["ratio"] = t_ff / t_tr if t_tr else float("inf")
        report["deltas"][str(d)] = entry
    if ts.psi0.n_qubits <= 8:
        const, violation = ffwd.error_bound_check(
            ansatz, ts, min(args.steps, 10000)
        )
        report["bound_constant"] = const
        report["bound_violation"] = violation
    _write_json(out / "report.json", report)
    print(json.dumps(report["deltas"], indent=2))
    return EXIT_OK


def cmd_spectrum(cfg, args):
    out = _outdir(cfg)
    if not args.ansatz_in:
        raise ConfigError("spectrum needs --ansatz-in")
    ansatz = parse_ansatz(Path(args.ansatz_in).read_text())
    psi0 = basis_state(cfg.get("state", "bits"))
    shots = cfg.shots or 10**4
    est = spx.extract_eigvectors(ansatz, psi0, shots, cfg.seed, args.threshold)
    rows = [
        (b, float(p), float(ph), float(e))
        for b, p, ph, e in zip(
            est.eigen_basis_states, est.probabilities, est.phases, est.energies_relative
        )
    ]
    _write_csv(
        out / "spectrum.csv",
        ["basis_state", "probability", "phase", "energy_relative"],
        rows,
    )
    _write_json(
        out / "spectrum.json",
        {
            "basis_states": est.eigen_basis_states,
            "phases": est.phases.tolist(),
            "energies_relative": est.energies_relative.tolist(),
            "delta_t": est.delta_t,
        },
    )
    print(f"{len(est.eigen_basis_states)} peaks: {est.eigen_basis_states}")
    return EXIT_OK


def cmd_qpe(cfg, args):
    out = _outdir(cfg)
    prep_bits = args.basis_state
    model = None
    path = "pure"
    if cfg.get("noise", "model"):
        model = model_from_file(cfg.get("noise", "model"))
        path = "noisy"
    if args.standard or not args.ansatz_in:
        h = _build_hamiltonian(cfg)
        from .hamiltonian import trotter_circuit

        target = trotter_circuit(h, cfg.trotter_spec())
        n_sys = h.n_qubits
    else:
        target = parse_ansatz(Path(args.ansatz_in).read_text())
        n_sys = target.n_qubits
    if len(prep_bits) != n_sys:
        raise ConfigError(f"basis state {prep_bits!r} does not match {n_sys} qubits")
    prep = preparation_for_bits(prep_bits)
    res = spx.qpe(
        target,
        prep,
        args.bits,
        cfg.delta_t,
        shots=cfg.shots,
        path=path,
        model=model,
        seed=cfg.seed,
    )
    rows = sorted(res.distribution.items())
    _write_csv(out / "qpe.csv", ["bits", "probability"], rows)
    circ = spx.qpe_circuit(target, prep, args.bits, cfg.delta_t)
    _write_json(
        out / "qpe.json",
        {
            "precision_bits": res.precision_bits,
            "variation_distance_to_ideal": res.variation_distance_to_ideal,
            "gate_count": len(circ.gates),
            "mode": "standard" if args.standard or not args.ansatz_in else "enhanced",
        },
    )
    top = max(res.distribution.items(), key=lambda kv: kv[1])
    print(f"peak {top[0]} p={top[1]:.4f}, distance to ideal {res.variation_distance_to_ideal:.4f}")
    return EXIT_OK


def cmd_qee(cfg, args):
    out = _outdir(cfg)
    if not args.ansatz_in:
        raise ConfigError("qee needs --ansatz-in")
    ansatz = parse_ansatz(Path(args.ansatz_in).read_text())
    phases = {}
    for bits in args.basis_state:
        phases[bits] = spx.qee(
            ansatz, bits, cfg.delta_t, shots=cfg.shots, seed=cfg.seed
        )
    _write_json(out / "qee.json", {"phases": phases, "delta_t": cfg.delta_t})
    for b, p in phases.items():
        print(f"{b}: phase {p:+.6f}")
    return EXIT_OK


def cmd_noise_sweep(cfg, args):
    out = _outdir(cfg)
    if not args.ansatz_in:
        raise ConfigError("noise-sweep needs --ansatz-in")
    ansatz = parse_ansatz(Path(args.ansatz_in).read_text())
    ts = _build_ts(cfg)
    pipelines.detect_neig(ts, seed=cfg.seed)
    model = (
        model_from_file(cfg.get("noise", "model"))
        if cfg.get("noise", "model")
        else default_model()
    )
    g0 = float(ansatz.gammas[0]) if len(ansatz.gammas) else 0.0
    lo = args.grid_lo if args.grid_lo is not None else g0 - 1.0
    hi = args.grid_hi if args.grid_hi is not None else g0 + 1.0
    grid = np.linspace(lo, hi, args.grid_points)
    family = lambda g: ansatz.with_params(
        gammas=np.concatenate([[g], ansatz.gammas[1:]])
    )
    sweep = resilience_sweep(ts, family, model, grid)
    _write_csv(
        out / "sweep.csv",
        ["gamma", "cost_clean", "cost_noisy"],
        [
            (float(g), float(c), float(n))
            for g, c, n in zip(sweep.grid, sweep.clean, sweep.noisy)
        ],
    )
    _write_json(
        out / "sweep.json",
        {"argmin_clean": sweep.argmin_clean, "argmin_noisy": sweep.argmin_noisy},
    )
    print(
        f"argmin clean {sweep.argmin_clean:.6f}, noisy {sweep.argmin_noisy:.6f}"
    )
    return EXIT_OK


_HANDLERS = {
    "neig": cmd_neig,
    "train": cmd_train,
    "fastforward": cmd_fastforward,
    "spectrum": cmd_spectrum,
    "qpe": cmd_qpe,
    "qee": cmd_qee,
    "noise-sweep": cmd_noise_sweep,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help"):
        print(
            f"unknown subcommand {argv[0]!r}; expected one of {', '.join(SUBCOMMANDS)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    if not args.subcommand:
        parser.print_help()
        return EXIT_USAGE
    try:
        cfg = _load_cfg(args)
        diags = validate(cfg)
        if diags:
            for path, reason in diags:
                print(f"config error: {path}: {reason}", file=sys.stderr)
            return EXIT_VALIDATION
        code = _HANDLERS[args.subcommand](cfg, args)
        _manifest(_outdir(cfg), args.subcommand, cfg, args, _input_files(args))
        return code
    except (ConfigError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FsvffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
