"""Command-line front end: orchestration, CSV/JSON emission, run manifests.

Every run writes its data file(s) plus a <out>.manifest.json recording the
effective configuration, wall time, per-check pass/fail flags and sha256
digests of the outputs, so reruns are auditable byte for byte.  Exit codes:
0 success, 1 usage error (bad flags, bad config, bad parameter ranges),
2 physics-check failure (a property the run asserts came out false).

Flags may come from a JSON config file (--config); explicit flags win.
Unknown config keys are hard errors, never ignored.  All randomness flows
from the single --seed value through numpy SeedSequence spawning.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__, hilbert
from .hilbert import DensityMatrix, Operator
from .kernel import equilibrium, markovian, solve_kernel, calibration_residual, f_omega
from .correlator import (lehmann_spectrum, weak_spectrum, fdt_max_residual,
                         tls_equal_time_variance, tls_variance_asymptote)
from .oscillator import FockSpace, coherent_state, squeezed_vacuum, thermal_osc, quasi_moment, weak_moment
from .junction import JunctionConfig, fig1_scan
from .povm import MeasurementPlan, finite_eta_correlator, weak_reference, completeness_defect, sample_records

DEFAULT_SEED = 20240117


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage, which is reserved for
    # physics failures here; route through UsageError instead.
    def error(self, message):
        raise UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit_table(rows, schema, fmt: str, path: str, units: str = "") -> None:
    """Write rows as CSV (17 significant digits) or a JSON object array."""
    for row in rows:
        if len(row) != len(schema):
            raise ValueError("row does not match schema")
    if fmt == "csv":
        buf = io.StringIO()
        if units:
            buf.write(f"# {units}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(schema)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        data = buf.getvalue()
    elif fmt == "json":
        out = [dict(zip(schema, row)) for row in rows]
        data = json.dumps(out, indent=1) + "\n"
    else:
        raise UsageError(f"unknown format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(data)


def parse_table(path: str):
    """Read back an emit_table CSV: (schema, rows with floats restored)."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    schema = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            try:
                row.append(int(cell))
            except ValueError:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
        rows.append(tuple(row))
    return schema, rows


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(command, params, seed, checks, outputs, started):
    manifest = {
        "version": __version__,
        "command": command,
        "config": params,
        "seed": seed,
        "wall_time_s": round(time.time() - started, 3),
        "checks": {k: bool(v) for k, v in checks.items()},
        "outputs": {p: _digest(p) for p in outputs},
        "manifest_schema": 1,
    }
    path = outputs[0] + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _ordering_kernel(ordering: str, Td: float):
    if ordering == "symmetrized":
        return markovian()
    if ordering == "equilibrium":
        return equilibrium(Td)
    if ordering == "emission":
        return equilibrium(0.0, sign=1)
    if ordering == "absorption":
        return equilibrium(0.0, sign=-1)
    raise UsageError(f"unknown ordering {ordering!r}")


# ---------------------------------------------------------------- commands


def _cmd_fig1(args, checks):
    cfg = JunctionConfig(T=0.0, T_d=0.0)
    zs = np.linspace(0.0, args.z_max, args.steps + 1)
    scan = fig1_scan(cfg, zs, threads=args.threads)
    rows = [(r.z, r.emission, r.sym_abs, r.re_sq, r.violated) for r in scan.rows]
    checks["zero_drive_emission_exact"] = scan.rows[0].emission == 0.0
    checks["zero_drive_sym_exact"] = scan.rows[0].sym_abs == 1.0
    checks["violation_window_found"] = math.isfinite(scan.z_hi)
    emit_table(rows, ("z", "emission", "sym_abs", "re_sq", "violated"),
               args.format, args.out,
               units="driven junction noise at omega = Omega, T = T_d = 0; "
                     "spectral weights per 2*pi*G*hbar*Omega*t0; z = V_ac/Omega")
    summary = {"z_lo": scan.z_lo, "z_hi": scan.z_hi}
    spath = args.out + ".summary.json"
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return [args.out, spath]


def _spectrum_system(args):
    if args.system == "tls":
        H = hilbert.tls_hamiltonian(args.omega)
        A = hilbert.sigma_x()
        rho = hilbert.thermal_state(H, args.T)
    elif args.system == "oscillator":
        space = FockSpace(args.dim)
        H = Operator(np.diag(args.omega * (np.arange(args.dim) + 0.5)).astype(complex),
                     hermitian=True)
        A = space.x
        rho = hilbert.thermal_state(H, args.T)
    else:
        raise UsageError(f"unknown system {args.system!r}")
    return H, rho, A


def _cmd_spectrum(args, checks):
    H, rho, A = _spectrum_system(args)
    kern = _ordering_kernel(args.ordering, args.Td)
    s_ab = lehmann_spectrum(H, rho, A, A)
    s_ba = lehmann_spectrum(H, rho, A, A)
    spec = weak_spectrum(s_ab, s_ba, kern)
    rows = [(float(om), float(wt.real), float(wt.imag))
            for om, wt in zip(spec.omegas, spec.weights)]
    checks["weights_real"] = max((abs(wt.imag) for wt in spec.weights),
                                 default=0.0) < 1e-10
    if args.ordering == "equilibrium" and args.Td == args.T:
        checks["equilibrium_silence"] = spec.max_abs_weight() < 1e-12
    emit_table(rows, ("omega", "weight_re", "weight_im"), args.format, args.out,
               units=f"line weights of 2*pi*delta(omega - line) in S_AA; "
                     f"{args.system}, ordering {args.ordering}")
    return [args.out]


def _cmd_fdt_check(args, checks):
    rows = []
    if args.system == "tls":
        H = hilbert.tls_hamiltonian(args.omega)
        pairs = [("sx_sx", hilbert.sigma_x(), hilbert.sigma_x()),
                 ("sx_sy", hilbert.sigma_x(), hilbert.sigma_y()),
                 ("sz_sz", hilbert.sigma_z(), hilbert.sigma_z())]
    elif args.system == "oscillator":
        space = FockSpace(args.dim)
        H = Operator(np.diag(args.omega * (np.arange(args.dim) + 0.5)).astype(complex),
                     hermitian=True)
        pairs = [("x_x", space.x, space.x), ("x_p", space.x, space.p),
                 ("p_p", space.p, space.p)]
    else:
        raise UsageError(f"unknown system {args.system!r}")
    worst = 0.0
    for name, A, B in pairs:
        res = fdt_max_residual(H, args.T, A, B)
        worst = max(worst, res)
        rows.append((args.system, name, args.T, res))
    checks["fdt_residuals_small"] = worst < 1e-12
    emit_table(rows, ("system", "pair", "T", "max_residual"), args.format, args.out,
               units="max |S_AB(omega) - exp(omega/T) S_BA(-omega)| over lines")
    return [args.out]


def _pfunction_states(dim):
    return [("coherent_0.8+0.3j", coherent_state(0.8 + 0.3j, dim)),
            ("thermal_nbar1", thermal_osc(1.0, dim)),
            ("squeezed_r0.5", squeezed_vacuum(0.5, dim))]


def _cmd_pfunction(args, checks):
    space = FockSpace(args.dim)
    rows = []
    worst_p = worst_q = 0.0
    for label, rho in _pfunction_states(args.dim):
        for n in range(args.max_order + 1):
            for k in range(args.max_order + 1 - n):
                word = ["a"] * n + ["a+"] * k
                p_val = quasi_moment(space, rho, n, k, "P")
                q_val = quasi_moment(space, rho, n, k, "Q")
                w_val = quasi_moment(space, rho, n, k, "wigner")
                wp = weak_moment(space, rho, word, kernel_sign=1) if word else p_val
                wq = weak_moment(space, rho, word, kernel_sign=-1) if word else q_val
                worst_p = max(worst_p, abs(wp - p_val))
                worst_q = max(worst_q, abs(wq - q_val))
                for ordering, val in (("P", p_val), ("Q", q_val), ("wigner", w_val),
                                      ("weak_normal", wp), ("weak_antinormal", wq)):
                    rows.append((label, n, k, ordering, val.real, val.imag))
    checks["weak_matches_P"] = worst_p < 1e-9
    checks["weak_matches_Q"] = worst_q < 1e-9
    emit_table(rows, ("state", "n", "k", "ordering", "moment_re", "moment_im"),
               args.format, args.out,
               units=f"<a^n (a+)^k> under each ordering, Fock dim {args.dim}")
    return [args.out]


def _cmd_tls_variance(args, checks):
    x = args.omega_tinf
    val = tls_equal_time_variance(1.0, x)
    asym = tls_variance_asymptote(1.0, x)
    rows = [(x, val, asym, val < 0.0)]
    checks["asymptote_consistent"] = abs(val - asym) < max(1e-3, 10 / x)
    emit_table(rows, ("omega_tinf", "variance", "asymptote", "negative"),
               args.format, args.out,
               units="equal-time emission-ordered variance of sigma_x + sigma_z "
                     "on the sigma_y eigenstate vs memory cutoff")
    return [args.out]


def _povm_case(name, eta):
    sx = hilbert.sigma_x()
    if name == "cold-tls":
        H = hilbert.tls_hamiltonian(1.0)
        rho = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
        return MeasurementPlan(H, rho, ((sx, -1.0), (sx, 1.0)),
                               equilibrium(0.0), 0.05, (-4.0, 4.0), eta=eta)
    if name == "warm-tls":
        H = hilbert.tls_hamiltonian(1.0)
        rho = hilbert.tls_thermal(1.0, 0.7)
        return MeasurementPlan(H, rho, ((sx, -1.0), (sx, 1.0)),
                               equilibrium(0.7), 0.05, (-4.0, 4.0), eta=eta)
    if name == "osc-kick":
        space = FockSpace(8)
        nop = Operator(np.diag(np.arange(8).astype(complex)), hermitian=True)
        rho = coherent_state(0.6, 8)
        return MeasurementPlan(nop, rho, ((space.x, 0.0), (nop, 0.8)),
                               markovian(), 0.025, (0.0, 0.8), eta=eta)
    raise UsageError(f"unknown povm case {name!r}")


def _cmd_povm_converge(args, checks):
    etas = [float(s) for s in args.etas.split(",") if s]
    if len(etas) < 2 or any(e <= 0 or e > 1 for e in etas):
        raise UsageError("need at least two etas in (0, 1]")
    seeds = np.random.SeedSequence(args.seed).generate_state(len(etas))
    rows, biases = [], []
    for eta, sd in zip(etas, seeds):
        plan = _povm_case(args.case, eta)
        est, err = finite_eta_correlator(plan, (0, 1), samples=args.samples,
                                         seed=int(sd))
        ref = weak_reference(plan, (0, 1))
        rows.append((eta, est, err, ref, est - ref))
        biases.append(est - ref)
    plan0 = _povm_case(args.case, etas[0])
    checks["completeness"] = completeness_defect(plan0) < 1e-8
    if args.samples == 0:
        ok = True
        for i in range(len(etas) - 1):
            if abs(etas[i] / etas[i + 1] - 2.0) < 1e-12:
                ratio = biases[i] / biases[i + 1] if biases[i + 1] else math.inf
                ok = ok and 3.2 <= ratio <= 4.8
        checks["quadratic_bias"] = ok
    if args.records:
        recs = sample_records(_povm_case(args.case, etas[-1]),
                              max(args.samples, 1000), seed=args.seed)
        with open(args.records, "w") as fh:
            for r in recs:
                fh.write(json.dumps({"seed": r.seed, "outcomes": list(r.outcomes),
                                     "weight": r.weight, "probability": r.probability,
                                     "state_hash": r.state_hash}) + "\n")
    emit_table(rows, ("eta", "estimate", "stderr", "weak_reference", "bias"),
               args.format, args.out,
               units=f"finite-coupling record correlator, case {args.case}; "
                     "bias = estimate - same-lattice weak limit")
    return [args.out] + ([args.records] if args.records else [])


def _cmd_calibrate_kernel(args, checks):
    rng = np.random.default_rng(np.random.SeedSequence(args.seed).generate_state(1)[0])
    rows = []
    worst = 0.0
    for _ in range(args.count):
        omega = float(10.0 ** rng.uniform(-1, 1))
        T = float(10.0 ** rng.uniform(-1, 1))
        kern = solve_kernel(omega, T)
        target = 1.0 / math.tanh(omega / (2 * T))
        got = f_omega(kern, omega).imag
        rel = abs(got - target) / target
        res = calibration_residual(f_omega(kern, omega), omega, T)
        worst = max(worst, rel, res.sign_residual(1))
        rows.append((omega, T, kern.Td, got, target, rel))
    checks["recovers_coth"] = worst < 1e-10
    emit_table(rows, ("omega", "T", "Td_solved", "imag_f", "coth_target", "rel_error"),
               args.format, args.out,
               units="detector kernel calibration against a T-thermal line pair")
    return [args.out]


_COMMANDS = {
    "fig1": _cmd_fig1,
    "spectrum": _cmd_spectrum,
    "fdt-check": _cmd_fdt_check,
    "pfunction": _cmd_pfunction,
    "tls-variance": _cmd_tls_variance,
    "povm-converge": _cmd_povm_converge,
    "calibrate-kernel": _cmd_calibrate_kernel,
}


def _build_parser():
    top = _Parser(prog="weaknoise", description=__doc__,
                  formatter_class=argparse.RawDescriptionHelpFormatter)
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", metavar="command")
    subparsers = {}

    def common(p, default_out):
        p.add_argument("--config", help="JSON file of parameter defaults; flags win")
        p.add_argument("--out", default=default_out, help="output data file")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--threads", type=int, default=1)

    p = subparsers["fig1"] = sub.add_parser(
        "fig1", help="driven-junction squeezing scan (CSV + window summary)")
    p.add_argument("--z-max", dest="z_max", type=float, default=4.0)
    p.add_argument("--steps", type=int, default=400)
    common(p, "fig1.csv")

    p = subparsers["spectrum"] = sub.add_parser("spectrum", help="weak-ordered line spectrum of a small system")
    p.add_argument("--system", choices=("tls", "oscillator"), default="tls")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--Td", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--ordering", default="symmetrized",
                   choices=("symmetrized", "equilibrium", "emission", "absorption"))
    common(p, "spectrum.csv")

    p = subparsers["fdt-check"] = sub.add_parser("fdt-check", help="fluctuation-dissipation residuals per line")
    p.add_argument("--system", choices=("tls", "oscillator"), default="tls")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=16)
    common(p, "fdt_check.csv")

    p = subparsers["pfunction"] = sub.add_parser("pfunction", help="ladder-moment table under all orderings")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--max-order", dest="max_order", type=int, default=4)
    common(p, "pfunction.csv")

    p = subparsers["tls-variance"] = sub.add_parser("tls-variance", help="memory-cutoff variance of the precessing observable")
    p.add_argument("--omega-tinf", dest="omega_tinf", type=float, default=100.0)
    common(p, "tls_variance.csv")

    p = subparsers["povm-converge"] = sub.add_parser("povm-converge", help="finite-coupling record vs weak limit")
    p.add_argument("--case", default="cold-tls",
                   choices=("cold-tls", "warm-tls", "osc-kick"))
    p.add_argument("--etas", default="0.2,0.1,0.05")
    p.add_argument("--samples", type=int, default=0,
                   help="0: integrate exactly; >= 1e4: Monte Carlo")
    p.add_argument("--records", default="",
                   help="optional NDJSON trajectory audit file")
    common(p, "povm_converge.csv")

    p = subparsers["calibrate-kernel"] = sub.add_parser("calibrate-kernel", help="solve the detector kernel from thermal lines")
    p.add_argument("--count", type=int, default=20)
    common(p, "calibrate_kernel.csv")

    return top, subparsers


def _apply_config(args, parser_defaults):
    if not args.config:
        return vars(args)
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    ns = vars(args)
    allowed = set(ns) - {"command", "config"}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in allowed:
            raise UsageError(f"unknown config key {key!r}")
        # Flags win: only apply when the flag still holds its default.
        if ns[dest] == parser_defaults.get(dest):
            ns[dest] = value
    return ns


def main(argv=None) -> int:
    parser, subparsers = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a command is required (see --help)")
        defaults = vars(subparsers[args.command].parse_args([]))
        _apply_config(args, defaults)
        started = time.time()
        checks = {}
        try:
            outputs = _COMMANDS[args.command](args, checks)
        except (ValueError, RuntimeError) as exc:
            raise UsageError(f"{args.command}: {exc}") from exc
        params = {k: v for k, v in vars(args).items()
                  if k not in ("command", "config")}
        _write_manifest(args.command, params, args.seed, checks, outputs, started)
        if not all(checks.values()):
            failed = [k for k, v in checks.items() if not v]
            print(f"physics checks failed: {', '.join(failed)}", file=sys.stderr)
            return 2
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
