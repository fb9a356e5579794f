"""Local/non-local complementarity (P, Q) and quantum-phase-transition dips.

P = M^2 / (N s)^2 measures local order. Q = 1 - T chi / (N s^2) measures
non-local correlation, with chi the reduced (per-spin) susceptibility; this
normalisation gives Q = 1 for the singlet and Q = 0 for the saturated product
state. With the correlation-only susceptibility,
P + Q = 1 - Var(sum S_z) / (N s)^2 <= 1.
"""

from dataclasses import dataclass

import numpy as np

from .thermal import moments

PQ_VARIANTS = ("fluctuation", "correlation_only")


@dataclass(frozen=True)
class PQPoint:
    T: float
    B: float
    P: float
    Q: float
    susceptibility_variant: str

    @property
    def sum(self):
        return self.P + self.Q


@dataclass(frozen=True)
class DipEstimate:
    field: float
    index: int
    interior: bool
    uncertainty: float
    value: float


def compute_P(M, N, s=0.5):
    if abs(M) > N * s * (1 + 1e-12):
        raise ValueError(f"|M| = {abs(M)} exceeds saturation N*s = {N * s}")
    return min(1.0, (M / (N * s)) ** 2)


def compute_Q(chi_reduced, T, N, s=0.5):
    if not T > 0:
        raise ValueError("T must be positive")
    return 1.0 - T * chi_reduced / (N * s * s)


def pq_arrays(model, T_grid, B_grid, variant="correlation_only", s=0.5):
    """Arrays ``(P, Q)`` of shape ``(len(T_grid), len(B_grid))``."""
    if variant not in PQ_VARIANTS:
        raise ValueError(f"variant must be one of {PQ_VARIANTS}, got {variant!r}")
    T = np.atleast_1d(np.asarray(T_grid, dtype=float))
    B = np.atleast_1d(np.asarray(B_grid, dtype=float))
    if T.size == 0 or B.size == 0:
        raise ValueError("grids must be non-empty")
    N = model.n_spins
    m1, m2, _ = moments(model, T, B)
    P = np.minimum(1.0, m1 * m1 / (N * s) ** 2)
    var = m2 if variant == "correlation_only" else m2 - m1 * m1
    # T * chi_reduced = Var / N, so Q = 1 - Var / (N s)^2
    Q = 1.0 - var / (N * N * s * s)
    return P, Q


def pq_scan(model, T_grid, B_grid, variant="correlation_only", s=0.5):
    """Row-major (T outer, B inner) list of :class:`PQPoint`."""
    P, Q = pq_arrays(model, T_grid, B_grid, variant, s)
    T = np.atleast_1d(np.asarray(T_grid, dtype=float))
    B = np.atleast_1d(np.asarray(B_grid, dtype=float))
    return [
        PQPoint(float(T[i]), float(B[j]), float(P[i, j]), float(Q[i, j]), variant)
        for i in range(T.size)
        for j in range(B.size)
    ]


def detect_qpt_dip(points):
    """Field of the minimum of P+Q along a fixed-T slice.

    The grid minimum (ties go to the lower field) is refined with a parabola
    through it and its neighbours. A minimum on either end of the slice is
    reported with ``interior=False``.
    """
    if len(points) < 5:
        raise ValueError("need at least 5 points for dip detection")
    temps = {p.T for p in points}
    if len(temps) != 1:
        raise ValueError("points must share a single temperature")
    B = np.array([p.B for p in points])
    y = np.array([p.sum for p in points])
    if np.any(np.diff(B) <= 0):
        raise ValueError("points must be sorted by strictly increasing field")
    k = int(np.argmin(y))
    step = float(np.max(np.diff(B)))
    if k == 0 or k == len(B) - 1:
        return DipEstimate(float(B[k]), k, False, step, float(y[k]))
    x0, x1, x2 = B[k - 1 : k + 2]
    y0, y1, y2 = y[k - 1 : k + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a > 0:
        xv = float(np.clip(-b / (2 * a), x0, x2))
        c = y1 - a * x1 * x1 - b * x1
        yv = float(a * xv * xv + b * xv + c)
    else:
        xv, yv = float(x1), float(y1)
    return DipEstimate(xv, k, True, step, yv)


def bloch_vector(rho_site):
    """(<sigma_x>, <sigma_y>, <sigma_z>) of a single-qubit state."""
    r = np.asarray(rho_site)
    return np.array([2 * r[0, 1].real, -2 * r[0, 1].imag, (r[0, 0] - r[1, 1]).real])
