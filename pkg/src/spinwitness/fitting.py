"""Least-squares fits of dimer models to measured series, and data-side extraction.

The optimizer is Nelder-Mead (scipy) restarted from jittered starting points.
When the calibration scale is free it is eliminated analytically: for fixed
model parameters the best scale is ``sum(w y f) / sum(w f^2)``.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .complementarity import PQPoint, compute_P, compute_Q
from .entanglement import witness_value
from .series import ExperimentSeries
from .spin_models import DEFAULT_CONSTANTS, SpinChainModel
from .thermal import magnetization_grid, susceptibility_grid

MODEL_PARAMS = {
    "dimer": ("J", "g"),
    "alternating_dimer": ("J1", "J2", "g"),
}
DEFAULT_BOUNDS = {
    "J": (0.05, 100.0),
    "J1": (0.05, 100.0),
    "J2": (0.0, 100.0),
    "g": (1.0, 3.0),
    "scale": (1e-12, 1e12),
}
DEFAULT_INITIAL = {"J": 5.0, "J1": 5.0, "J2": 1.5, "g": 2.0, "scale": 1.0}
DEFAULT_FREE = {"dimer": ("J",), "alternating_dimer": ("J1", "J2")}
STALL_WINDOW = 50
STALL_RTOL = 1e-10
CURIE_CGS = 0.375148  # N_A mu_B^2 / k_B in emu K / mol


class FitError(ValueError):
    pass


@dataclass
class FitResult:
    model_kind: str
    params: dict
    residual_norm: float
    residuals: np.ndarray
    converged: bool
    iterations: int
    seed: int
    free_params: tuple = ()
    restarts: list = field(default_factory=list)

    def model(self, constants=DEFAULT_CONSTANTS):
        return make_model(self.model_kind, self.params, constants)

    def to_json(self):
        return json.dumps(
            {
                "params": {k: float(v) for k, v in self.params.items()},
                "residual_norm": float(self.residual_norm),
                "converged": bool(self.converged),
                "iterations": int(self.iterations),
                "seed": int(self.seed),
            },
            indent=2,
            sort_keys=True,
        )


def make_model(model_kind, params, constants=DEFAULT_CONSTANTS):
    g = params.get("g", 2.0)
    if model_kind == "dimer":
        return SpinChainModel.dimer(params["J"], g, constants)
    if model_kind == "alternating_dimer":
        return SpinChainModel.alternating_dimer(params["J1"], params["J2"], g, constants=constants)
    raise FitError(f"unknown model kind {model_kind!r}")


def model_curve(model, kind, x, fixed_value):
    """Reduced model prediction for a series of the given kind.

    Susceptibility series are modelled as dM/dB, which for these Hamiltonians
    equals the fluctuation variant.
    """
    x = np.asarray(x, dtype=float)
    if kind == "chi_vs_T":
        return susceptibility_grid(model, x, [fixed_value], "fluctuation")[:, 0]
    if kind == "chi_vs_B":
        return susceptibility_grid(model, [fixed_value], x, "fluctuation")[0]
    if kind == "M_vs_B":
        return magnetization_grid(model, [fixed_value], x)[0]
    raise FitError(f"unknown series kind {kind!r}")


def _best_scale(y, f, w):
    den = np.sum(w * f * f)
    return np.sum(w * y * f) / den if den > 0 else 1.0


class _StallTracker:
    """Simplex callback: stop once the best residual has stalled."""

    def __init__(self, floor):
        self.floor = floor
        self.history = []
        self.converged = False

    def __call__(self, intermediate_result):
        self.history.append(intermediate_result.fun)
        if len(self.history) > STALL_WINDOW:
            old = self.history[-STALL_WINDOW - 1]
            if abs(old - self.history[-1]) <= STALL_RTOL * max(abs(old), self.floor):
                self.converged = True
                raise StopIteration


def fit_model(
    series,
    model_kind="dimer",
    free_params=None,
    bounds=None,
    initial=None,
    seed=0,
    restarts=5,
    jitter=0.2,
    max_iterations=4000,
    constants=DEFAULT_CONSTANTS,
):
    """Fit ``scale * model(x; params)`` to ``series.y``.

    Parameters not listed in ``free_params`` are held at ``initial`` (or the
    defaults). By default the exchange constants are free, and the scale is
    free only when the series carries no ``calibration_scale``.
    Convergence means the best residual changed by less than 1e-10
    (relative) over the last 50 simplex iterations.
    """
    if model_kind not in MODEL_PARAMS:
        raise FitError(f"unknown model kind {model_kind!r}")
    allowed = set(MODEL_PARAMS[model_kind]) | {"scale"}
    if free_params is None:
        # an uncalibrated series also needs its scale fitted
        free = DEFAULT_FREE[model_kind] + (("scale",) if series.calibration_scale is None else ())
    else:
        free = tuple(free_params)
    unknown = set(free) - allowed
    if unknown:
        raise FitError(f"parameters {sorted(unknown)} are not valid for {model_kind}")
    if len(series) < 2:
        raise FitError("series too short to fit")
    bnds = dict(DEFAULT_BOUNDS)
    bnds.update(bounds or {})
    for name in free:
        lo, hi = bnds[name]
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise FitError(f"bounds for {name} must be finite with lo < hi, got {(lo, hi)}")
    start = dict(DEFAULT_INITIAL)
    if series.calibration_scale is not None:
        start["scale"] = series.calibration_scale
    start.update(initial or {})
    for name in free:
        lo, hi = bnds[name]
        if not lo <= start[name] <= hi:
            warnings.warn(f"initial {name}={start[name]} outside bounds {(lo, hi)}; clamped", stacklevel=2)
            start[name] = float(np.clip(start[name], lo, hi))

    scale_free = "scale" in free
    names = [n for n in free if n != "scale"]
    x, y = series.x, series.y
    w = series.weights if series.weights is not None else np.ones_like(y)
    data_norm = float(np.sum(w * y * y))

    def unpack(theta):
        p = {n: start[n] for n in MODEL_PARAMS[model_kind]}
        p.update(zip(names, theta))
        return p

    def evaluate(theta):
        p = unpack(theta)
        f = model_curve(make_model(model_kind, p, constants), series.kind, x, series.fixed_value)
        if scale_free:
            lo, hi = bnds["scale"]
            s = float(np.clip(_best_scale(y, f, w), lo, hi))
        else:
            s = start["scale"]
        r = y - s * f
        return float(np.sum(w * r * r)), s, r

    rng = np.random.default_rng(seed)
    runs = []
    if names:
        box = [bnds[n] for n in names]
        x0_base = np.array([start[n] for n in names])
        for k in range(restarts):
            x0 = x0_base if k == 0 else x0_base * (1.0 + jitter * rng.standard_normal(len(names)))
            x0 = np.clip(x0, [b[0] for b in box], [b[1] for b in box])
            tracker = _StallTracker(1e-28 * max(data_norm, 1e-300))
            res = minimize(
                lambda th: evaluate(th)[0],
                x0,
                method="Nelder-Mead",
                bounds=box,
                callback=tracker,
                options={"maxiter": max_iterations, "xatol": 0.0, "fatol": 0.0, "adaptive": len(names) > 2},
            )
            # status 0: the simplex collapsed onto one point, which is also a stall
            converged = tracker.converged or res.status == 0
            runs.append((float(res.fun), np.asarray(res.x), converged, len(tracker.history)))
    else:
        runs.append((evaluate(np.array([]))[0], np.array([]), True, 0))

    best = min(runs, key=lambda r: r[0])
    ssr, s, resid = evaluate(best[1])
    params = unpack(best[1])
    params["scale"] = s
    return FitResult(
        model_kind=model_kind,
        params=params,
        residual_norm=float(np.sqrt(ssr)),
        residuals=resid,
        converged=bool(best[2]),
        iterations=int(best[3]),
        seed=int(seed),
        free_params=free,
        restarts=[{"ssr": r[0], "converged": r[2], "iterations": r[3]} for r in runs],
    )


def molar_scale(g, spins_per_formula_unit=1):
    """Instrument scale (emu/mol per reduced unit) for cgs molar susceptibility."""
    return CURIE_CGS * g * g * spins_per_formula_unit


def _resolve_scale(series, scale, g, n_spins):
    if scale is not None:
        return float(scale)
    if series.calibration_scale is not None:
        return float(series.calibration_scale)
    if g is not None and n_spins is not None:
        return molar_scale(g, n_spins)
    raise FitError("no calibration scale: supply one, fit one, or give g and spins per formula unit")


def witness_series(series, scale=None, g=None, n_spins=None):
    """Unclamped witness 1 - 6 T chi_reduced at each point."""
    if series.kind not in ("chi_vs_T", "chi_vs_B"):
        raise FitError(f"witness extraction needs a susceptibility series, got {series.kind}")
    s = _resolve_scale(series, scale, g, n_spins)
    return witness_value(series.y / s, series.temperature)


def extract_concurrence_series(series, scale=None, g=None, n_spins=None):
    """Per-point witness concurrence ``[(x, C), ...]`` with C clamped to [0, 1]."""
    wv = witness_series(series, scale, g, n_spins)
    c = np.clip(wv, 0.0, 1.0)
    return list(zip(series.x.tolist(), c.tolist()))


def vanishing_point(x, witness):
    """First x where the witness falls through zero, by linear interpolation."""
    x = np.asarray(x, dtype=float)
    wv = np.asarray(witness, dtype=float)
    for k in range(len(x) - 1):
        if wv[k] > 0 >= wv[k + 1]:
            return float(x[k] + (x[k + 1] - x[k]) * wv[k] / (wv[k] - wv[k + 1]))
    return None


def pq_from_data(m_series, chi_series, model, scale_m=1.0, scale_chi=1.0, truncation_field=4.0, s=0.5):
    """P and Q at the magnetization series fields from measured M(B) and chi(B).

    The measured susceptibility is dM/dB; the model <sum S_z>^2 term is added
    back (both in reduced units) to form the correlation-only susceptibility.
    Above ``truncation_field`` or outside the measured chi range the fitted
    model curve is used instead of data.
    """
    if m_series.kind != "M_vs_B" or chi_series.kind != "chi_vs_B":
        raise FitError("pq_from_data needs an M_vs_B and a chi_vs_B series")
    T = m_series.fixed_value
    if abs(T - chi_series.fixed_value) > 1e-9 * max(1.0, abs(T)):
        raise FitError(f"temperature mismatch: M at {T} K, chi at {chi_series.fixed_value} K")
    lo = max(m_series.x[0], chi_series.x[0])
    hi = min(m_series.x[-1], chi_series.x[-1])
    if lo > hi:
        raise FitError("magnetization and susceptibility field ranges do not overlap")
    B = m_series.x
    N = model.n_spins
    M_model = magnetization_grid(model, [T], B)[0]
    chi_fluct_model = susceptibility_grid(model, [T], B, "fluctuation")[0]
    chi_meas = np.interp(B, chi_series.x, chi_series.y / scale_chi)
    use_data = (B >= chi_series.x[0]) & (B <= min(chi_series.x[-1], truncation_field))
    chi = np.where(use_data, chi_meas, chi_fluct_model) + M_model**2 / (T * N)
    M = np.clip(m_series.y / scale_m, -N * s, N * s)
    return [
        PQPoint(float(T), float(B[k]), compute_P(M[k], N, s), compute_Q(chi[k], T, N, s), "correlation_only")
        for k in range(B.size)
    ]


def synthetic_series(model, kind, x, fixed_value, noise=0.0, seed=0, scale=1.0):
    """Model series with multiplicative Gaussian noise of relative size ``noise``."""
    y = scale * model_curve(model, kind, x, fixed_value)
    if noise:
        rng = np.random.default_rng(seed)
        y = y * (1.0 + noise * rng.standard_normal(y.shape))
    return ExperimentSeries(kind, np.asarray(x, dtype=float), y, fixed_value, calibration_scale=scale)
