"""Command-line entry point: figure tables as CSV, fits and witness extraction on data.

Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 fit did not converge.
Failures print one JSON line on stderr: ``{"error": ..., "code": ..., "message": ...}``.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .complementarity import detect_qpt_dip, pq_arrays, pq_scan
from .entanglement import concurrence_from_susceptibility, partial_trace, wootters_concurrence
from .fitting import (
    FitError,
    extract_concurrence_series,
    fit_model,
    molar_scale,
    model_curve,
    pq_from_data,
    vanishing_point,
    witness_series,
)
from .series import ExperimentSeries, SeriesError, fmt, load_series, write_grid, write_series, write_table
from .spin_models import PhysicalConstants, SpinChainModel, build_hamiltonian, diagonalize, ground_state_crossings
from .thermal import magnetization_grid, sector_thermal_state, susceptibility, susceptibility_grid

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NOT_CONVERGED = 4


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def _add_model_args(p):
    p.add_argument("--model", choices=["dimer", "altdimer"], default="dimer")
    p.add_argument("--j", type=float, default=4.0, help="dimer exchange J (K)")
    p.add_argument("--j1", type=float, default=4.0, help="intra-dimer exchange J1 (K)")
    p.add_argument("--j2", type=float, default=1.0, help="inter-dimer exchange J2 (K)")
    p.add_argument("--g", type=float, default=2.0, help="Lande g factor")
    p.add_argument("--n-spins", type=int, default=4, help="chain length for altdimer")
    p.add_argument("--mu-b-over-kb", type=float, default=PhysicalConstants().mu_B_over_kB)


def _add_grid_args(p, tdefaults=(0.1, 7.0, 50), bdefaults=(0.0, 7.0, 50)):
    p.add_argument("--tmin", type=float, default=tdefaults[0])
    p.add_argument("--tmax", type=float, default=tdefaults[1])
    p.add_argument("--tsteps", type=int, default=tdefaults[2])
    p.add_argument("--bmin", type=float, default=bdefaults[0])
    p.add_argument("--bmax", type=float, default=bdefaults[1])
    p.add_argument("--bsteps", type=int, default=bdefaults[2])


def _add_output_args(p, default_name):
    p.add_argument("--out", default=None, help=f"output path (default: <outdir>/{default_name})")
    p.add_argument("--outdir", default=".")


def build_parser():
    parser = argparse.ArgumentParser(prog="spinwitness", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="key=value file; command-line flags override it")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (env SPINWITNESS_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues versus field")
    _add_model_args(p)
    p.add_argument("--bmin", type=float, default=0.0)
    p.add_argument("--bmax", type=float, default=7.0)
    p.add_argument("--steps", type=int, default=400)
    _add_output_args(p, "spectrum.csv")

    p = sub.add_parser("sweep", help="observable on a (T, B) grid")
    _add_model_args(p)
    p.add_argument("--obs", choices=["concurrence", "magnetization", "susceptibility", "pq"], required=True)
    p.add_argument(
        "--variant", default=None, help="susceptibility: fluctuation|correlation_only|derivative|closed_form; pq: fluctuation|correlation_only"
    )
    _add_grid_args(p)
    p.add_argument("--fixed-t", type=float, default=None, help="collapse the T axis to this value")
    p.add_argument("--fixed-b", type=float, default=None, help="collapse the B axis to this value")
    p.add_argument("--pair", default="0,1", help="sites for concurrence, e.g. 0,1")
    p.add_argument("--noise", type=float, default=0.0, help="relative Gaussian noise added to series output")
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p, "sweep_<obs>.csv")

    p = sub.add_parser("witness", help="concurrence extracted from susceptibility data")
    p.add_argument("--input", required=True)
    p.add_argument("--scale", default="auto", help="'auto' (fit), 'file', 'molar', or a number")
    p.add_argument("--g", type=float, default=2.0)
    p.add_argument("--spins-per-fu", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p, "witness.csv")

    p = sub.add_parser("fit", help="fit a dimer or alternating-dimer model to a series")
    p.add_argument("--input", required=True)
    p.add_argument("--model", choices=["dimer", "altdimer"], default="dimer")
    p.add_argument("--free", default=None, help="comma list from J,J1,J2,g,scale")
    p.add_argument("--bounds", action="append", default=[], help="name=lo:hi, repeatable")
    p.add_argument("--init", action="append", default=[], help="name=value, repeatable")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iterations", type=int, default=4000, help="simplex iterations per restart")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu-b-over-kb", type=float, default=PhysicalConstants().mu_B_over_kB)
    p.add_argument("--curve-out", default=None, help="also write the fitted curve as a series")
    _add_output_args(p, "fit.json")

    p = sub.add_parser("crossings", help="ground-state level crossings versus field")
    _add_model_args(p)
    p.add_argument("--bmin", type=float, default=0.0)
    p.add_argument("--bmax", type=float, default=7.0)
    p.add_argument("--steps", type=int, default=701)
    p.add_argument("--tol", type=float, default=1e-10, help="energy tolerance (K)")
    _add_output_args(p, "crossings.csv")

    p = sub.add_parser("pq", help="P, Q and P+Q versus field at fixed T, with dip detection")
    _add_model_args(p)
    p.add_argument("--t", type=float, default=2.0)
    p.add_argument("--bmin", type=float, default=0.0)
    p.add_argument("--bmax", type=float, default=7.0)
    p.add_argument("--bsteps", type=int, default=351)
    p.add_argument("--variant", choices=["fluctuation", "correlation_only"], default="correlation_only")
    p.add_argument("--m-input", default=None, help="measured M_vs_B series")
    p.add_argument("--chi-input", default=None, help="measured chi_vs_B series")
    p.add_argument("--scale-m", type=float, default=None)
    p.add_argument("--scale-chi", type=float, default=None)
    p.add_argument("--truncation", type=float, default=4.0, help="use the model above this field (T)")
    _add_output_args(p, "pq.csv")
    return parser, sub


def read_config(path):
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = text.partition("=")
            cfg[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return cfg


def parse_args(argv):
    parser, sub = build_parser()
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument("--config")
    pre_parser.add_argument("--threads")
    pre_parser.add_argument("command", nargs="?")
    pre, _ = pre_parser.parse_known_args(argv)
    if pre.config and pre.command in sub.choices:
        cfg = read_config(pre.config)
        subparser = sub.choices[pre.command]
        typed = {}
        for action in subparser._actions:
            if action.dest in cfg:
                raw = cfg[action.dest]
                value = action.type(raw) if action.type else raw
                typed[action.dest] = [value] if isinstance(action, argparse._AppendAction) else value
                action.required = False
        subparser.set_defaults(**typed)
        if "threads" in cfg:
            parser.set_defaults(threads=int(cfg["threads"]))
    return parser.parse_args(argv)


def thread_count(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SPINWITNESS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def make_model(args):
    constants = PhysicalConstants(args.mu_b_over_kb)
    if args.model == "dimer":
        return SpinChainModel.dimer(args.j, args.g, constants)
    return SpinChainModel.alternating_dimer(args.j1, args.j2, args.g, args.n_spins, constants)


def axis(lo, hi, steps, name):
    if steps < 2:
        raise UsageError(f"{name} steps must be >= 2")
    if not lo < hi:
        raise UsageError(f"{name} range needs min < max, got {lo} >= {hi}")
    return np.linspace(lo, hi, steps)


def out_path(args, default_name):
    path = Path(args.out) if args.out else Path(args.outdir) / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def report(path, **info):
    extra = " ".join(f"{k}={v}" for k, v in info.items())
    print(f"wrote {path} {extra}".rstrip())


def parallel_rows(func, rows, threads):
    """Apply ``func`` to each row; results come back in input order."""
    if threads <= 1 or len(rows) <= 1:
        return [func(r) for r in rows]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, rows))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_spectrum(args):
    model = make_model(args)
    B = axis(args.bmin, args.bmax, args.steps, "B")
    rows = []
    for b in B:
        ev = diagonalize(build_hamiltonian(model, b)).eigenvalues
        rows.append([b, *ev])
    header = ["B_T"] + [f"E{k}" for k in range(model.dimension)]
    path = out_path(args, "spectrum.csv")
    write_table(path, header, rows, comments=[f"spectrum model={args.model} couplings={model.couplings} g={model.g_factor}"])
    crossings = ground_state_crossings(model, B)
    report(path, rows=len(rows), crossings=len(crossings), fields=";".join(fmt(c) for c in crossings))
    return 0


def _concurrence_row(model, T, B, pair):
    out = []
    for b in B:
        state = sector_thermal_state(model, T, b)
        rho = state.density_matrix.matrix
        if model.n_spins > 2 or pair != (0, 1):
            rho = partial_trace(rho, model.n_spins, pair)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
        out.append(wootters_concurrence(rho))
    return out


def cmd_sweep(args):
    model = make_model(args)
    if args.fixed_t is not None and args.fixed_b is not None:
        raise UsageError("--fixed-t and --fixed-b cannot both be given")
    T = np.array([args.fixed_t]) if args.fixed_t is not None else axis(args.tmin, args.tmax, args.tsteps, "T")
    B = np.array([args.fixed_b]) if args.fixed_b is not None else axis(args.bmin, args.bmax, args.bsteps, "B")
    if np.any(T <= 0):
        raise UsageError("temperatures must be positive")
    if np.any(B < 0):
        raise UsageError("fields must be non-negative")
    threads = thread_count(args)
    obs = args.obs
    variant = args.variant

    if obs == "concurrence":
        pair = tuple(int(s) for s in args.pair.split(","))
        values = np.array(parallel_rows(lambda t: _concurrence_row(model, t, B, pair), list(T), threads))
    elif obs == "magnetization":
        values = magnetization_grid(model, T, B)
    elif obs == "susceptibility":
        variant = variant or "fluctuation"
        if variant in ("fluctuation", "correlation_only"):
            values = susceptibility_grid(model, T, B, variant)
        else:
            values = np.array(
                parallel_rows(lambda t: [susceptibility(model, t, b, variant).value for b in B], list(T), threads)
            )
    else:
        variant = variant or "correlation_only"
        P, Q = pq_arrays(model, T, B, variant)
        values = P + Q

    series_kind = None
    if obs == "susceptibility" and args.fixed_b is not None:
        series_kind, x, fixed = "chi_vs_T", T, args.fixed_b
    elif obs == "susceptibility" and args.fixed_t is not None:
        series_kind, x, fixed = "chi_vs_B", B, args.fixed_t
    elif obs == "magnetization" and args.fixed_t is not None:
        series_kind, x, fixed = "M_vs_B", B, args.fixed_t

    path = out_path(args, f"sweep_{obs}.csv")
    desc = f"sweep obs={obs} model={args.model} couplings={model.couplings} g={model.g_factor}"
    if variant:
        desc += f" variant={variant}"
    if series_kind:
        y = values.reshape(-1)
        if args.noise:
            rng = np.random.default_rng(args.seed)
            y = y * (1.0 + args.noise * rng.standard_normal(y.shape))
            desc += f" noise={args.noise} seed={args.seed}"
        series = ExperimentSeries(series_kind, x, y, fixed, calibration_scale=1.0)
        write_series(series, path, comments=[desc])
        report(path, rows=len(series), schema=series_kind)
    else:
        write_grid(path, T, B, values, comments=[desc])
        report(path, rows=values.size, schema="grid")
    return 0


def _resolve_witness_scale(args, series):
    if args.scale == "auto":
        fit = fit_model(series, "dimer", free_params=("J", "scale"), seed=args.seed)
        print(f"fit J={fmt(fit.params['J'])} scale={fmt(fit.params['scale'])} converged={fit.converged}")
        return fit.params["scale"]
    if args.scale == "file":
        if series.calibration_scale is None:
            raise UsageError("--scale file but the input has no '# scale=' metadata")
        return series.calibration_scale
    if args.scale == "molar":
        return None
    try:
        return float(args.scale)
    except ValueError:
        raise UsageError(f"--scale must be auto, file, molar or a number, got {args.scale!r}") from None


def cmd_witness(args):
    series = load_series(args.input)
    if series.kind not in ("chi_vs_T", "chi_vs_B"):
        raise UsageError(f"witness needs a susceptibility series, got {series.kind}")
    scale = _resolve_witness_scale(args, series)
    if scale is None:
        scale = molar_scale(args.g, args.spins_per_fu)
    conc = extract_concurrence_series(series, scale)
    rows = []
    for k, (x, c) in enumerate(conc):
        res = concurrence_from_susceptibility(max(0.0, series.y[k] / scale), series.temperature[k])
        rows.append([x, res.chi_reduced, res.threshold, c, res.entangled])
    xname = "T_K" if series.kind == "chi_vs_T" else "B_T"
    path = out_path(args, "witness.csv")
    write_table(path, [xname, "chi_reduced", "threshold", "concurrence", "entangled"], rows, comments=[f"witness scale={fmt(scale)}"])
    vanish = vanishing_point(series.x, witness_series(series, scale)) if series.kind == "chi_vs_T" else None
    report(path, rows=len(rows), vanishing_T=fmt(vanish) if vanish is not None else "none")
    return 0


def _parse_assignments(items, kind):
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"expected name=value, got {item!r}")
        name, _, value = item.partition("=")
        if kind == "bounds":
            lo, _, hi = value.partition(":")
            out[name.strip()] = (float(lo), float(hi))
        else:
            out[name.strip()] = float(value)
    return out


def cmd_fit(args):
    series = load_series(args.input)
    kind = "dimer" if args.model == "dimer" else "alternating_dimer"
    free = tuple(s.strip() for s in args.free.split(",")) if args.free else None
    result = fit_model(
        series,
        kind,
        free_params=free,
        bounds=_parse_assignments(args.bounds, "bounds"),
        initial=_parse_assignments(args.init, "init"),
        seed=args.seed,
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        constants=PhysicalConstants(args.mu_b_over_kb),
    )
    path = out_path(args, "fit.json")
    path.write_text(result.to_json() + "\n")
    params = " ".join(f"{k}={fmt(v)}" for k, v in sorted(result.params.items()))
    report(path, converged=result.converged, residual_norm=fmt(result.residual_norm), params=params.replace(" ", ","))
    if args.curve_out:
        curve = result.params["scale"] * model_curve(result.model(PhysicalConstants(args.mu_b_over_kb)), series.kind, series.x, series.fixed_value)
        fitted = ExperimentSeries(series.kind, series.x, curve, series.fixed_value, calibration_scale=series.calibration_scale)
        write_series(fitted, args.curve_out, comments=[f"fitted curve model={kind}"])
        report(args.curve_out, rows=len(fitted), schema=series.kind)
    if not result.converged:
        print(json.dumps({"error": "not_converged", "code": EXIT_NOT_CONVERGED, "message": "best-so-far parameters written"}), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return 0


def cmd_crossings(args):
    model = make_model(args)
    B = axis(args.bmin, args.bmax, args.steps, "B")
    fields = ground_state_crossings(model, B, args.tol)
    path = out_path(args, "crossings.csv")
    write_table(path, ["index", "B_T"], [(k, b) for k, b in enumerate(fields)], comments=[f"crossings model={args.model} couplings={model.couplings} g={model.g_factor}"])
    report(path, rows=len(fields), fields=";".join(fmt(b) for b in fields) or "none")
    return 0


def cmd_pq(args):
    model = make_model(args)
    if not args.t > 0:
        raise UsageError("--t must be positive")
    if args.m_input or args.chi_input:
        if not (args.m_input and args.chi_input):
            raise UsageError("--m-input and --chi-input must be given together")
        m_series = load_series(args.m_input, "M_vs_B")
        chi_series = load_series(args.chi_input, "chi_vs_B")
        scale_m = args.scale_m if args.scale_m is not None else (m_series.calibration_scale or 1.0)
        scale_chi = args.scale_chi if args.scale_chi is not None else (chi_series.calibration_scale or 1.0)
        points = pq_from_data(m_series, chi_series, model, scale_m, scale_chi, args.truncation)
        source = "data"
    else:
        B = axis(args.bmin, args.bmax, args.bsteps, "B")
        points = pq_scan(model, [args.t], B, args.variant)
        source = "model"
    path = out_path(args, "pq.csv")
    write_table(
        path,
        ["B_T", "P", "Q", "P_plus_Q"],
        [(p.B, p.P, p.Q, p.sum) for p in points],
        comments=[f"pq source={source} T_K={fmt(points[0].T)} variant={points[0].susceptibility_variant}"],
    )
    dip = detect_qpt_dip(points)
    report(path, rows=len(points))
    print(f"dip B={fmt(dip.field)} interior={dip.interior} uncertainty={fmt(dip.uncertainty)} value={fmt(dip.value)}")
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "witness": cmd_witness,
    "fit": cmd_fit,
    "crossings": cmd_crossings,
    "pq": cmd_pq,
}


def _fail(code, exc):
    print(json.dumps({"error": type(exc).__name__, "code": code, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (OSError, SeriesError) as exc:
        return _fail(EXIT_IO, exc)
    except (UsageError, FitError, ValueError) as exc:
        return _fail(EXIT_USAGE, exc)


if __name__ == "__main__":
    sys.exit(main())

