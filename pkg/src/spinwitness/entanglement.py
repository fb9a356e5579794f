"""Concurrence of two-qubit states and its closed-form and witness routes.

The exact Wootters computation is the reference. The closed forms below are
written so that they reproduce it for the zero-field dimer:

* correlation form:  C = 2 max(0, |<S1.S2>| - 1/4)
* temperature form:  C = max(0, (1 - 3 e^{-J/T}) / (1 + 3 e^{-J/T}))
* energy form:       C = 2 max(0, |U_bond / J| - 1/4), U_bond = J <S1.S2>

Variants of these expressions that drop the absolute value, the factor 3 in
the numerator or the per-bond normalisation give 0 for the singlet, 2 at
T -> 0 or 0 at T = 0; they violate 0 <= C <= 1 or the singlet limit.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .spin_models import OperatorMatrix

PSD_TOL = 1e-10
CLAMP_TOL = 1e-10

_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


@dataclass(frozen=True, eq=False)
class TwoQubitDensity:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", validate_density(self.matrix, dim=4))


@dataclass(frozen=True)
class WitnessResult:
    chi_reduced: float
    threshold: float
    concurrence: float
    entangled: bool


def validate_density(rho, dim=None):
    m = rho.matrix if isinstance(rho, (OperatorMatrix, TwoQubitDensity)) else rho
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"density matrix must be square, got {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} density matrix, got {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(m).real - 1.0) > 1e-12:
        raise ValueError(f"density matrix trace is {np.trace(m).real!r}, expected 1")
    if np.linalg.eigvalsh(m).min() < -PSD_TOL:
        raise ValueError("density matrix is not positive semidefinite")
    return m


def partial_trace(rho, n_spins, keep):
    """Reduced state on the sites in ``keep`` (in that order)."""
    m = rho.matrix if isinstance(rho, OperatorMatrix) else np.asarray(rho)
    if m.shape != (1 << n_spins, 1 << n_spins):
        raise ValueError(f"state of shape {m.shape} does not match {n_spins} spins")
    keep = tuple(int(k) for k in keep)
    if not keep:
        raise ValueError("keep at least one site")
    if len(set(keep)) != len(keep):
        raise ValueError(f"kept sites must be distinct, got {keep}")
    if any(not 0 <= k < n_spins for k in keep):
        raise IndexError(f"kept sites {keep} out of range for {n_spins} spins")
    return kernels.partial_trace_kernel(m.astype(complex), n_spins, keep)


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def flip_spectrum(rho):
    """Square roots of the eigenvalues of rho * rho_tilde, descending.

    Computed as singular values of sqrt(rho) sqrt(rho_tilde) so the small
    values are not square roots of rounding noise.
    """
    m = validate_density(rho, dim=4)
    s = _psd_sqrt(m)
    s_tilde = _SYSY @ s.conj() @ _SYSY
    return np.linalg.svd(s @ s_tilde, compute_uv=False)


def wootters_concurrence(rho):
    sq = flip_spectrum(rho)
    c = sq[0] - sq[1] - sq[2] - sq[3]
    return float(min(1.0, max(0.0, c)))


def spin_flip_eigenvalues(rho):
    """Eigenvalues of rho * rho_tilde, descending, tiny negatives clamped."""
    lam = flip_spectrum(rho) ** 2
    return np.where(lam > -CLAMP_TOL, np.maximum(lam, 0.0), lam)


def concurrence_from_correlation(corr):
    if not -0.75 - 1e-12 <= corr <= 0.25 + 1e-12:
        raise ValueError(f"<S1.S2> must lie in [-3/4, 1/4], got {corr}")
    return 2.0 * max(0.0, abs(corr) - 0.25)


def concurrence_vs_temperature(J, T):
    if not J > 0:
        raise ValueError("J must be positive (antiferromagnetic)")
    if not T > 0:
        raise ValueError("T must be positive")
    x = np.exp(-J / T)
    return float(max(0.0, (1.0 - 3.0 * x) / (1.0 + 3.0 * x)))


def vanishing_temperature(J):
    """Temperature above which the zero-field dimer concurrence is zero: J / ln 3."""
    return J / np.log(3.0)


def concurrence_from_energy(U_bond, J):
    if not J > 0:
        raise ValueError("J must be positive")
    return 2.0 * max(0.0, abs(U_bond / J) - 0.25)


def separability_threshold(T):
    """Smallest reduced susceptibility a separable state can have."""
    return 1.0 / (6.0 * T)


def witness_value(chi_reduced, T):
    """Unclamped witness 1 - 6 T chi; positive means entangled."""
    return 1.0 - 6.0 * T * chi_reduced


def concurrence_from_susceptibility(chi_reduced, T):
    if chi_reduced < 0:
        raise ValueError(f"susceptibility must be non-negative, got {chi_reduced}")
    if not T > 0:
        raise ValueError("T must be positive")
    threshold = separability_threshold(T)
    c = min(1.0, max(0.0, witness_value(chi_reduced, T))) if chi_reduced < threshold else 0.0
    return WitnessResult(float(chi_reduced), threshold, c, c > 0)
