"""Dimer and alternating-dimer Heisenberg chains: operators, Hamiltonians, spectra.

Energies are in Kelvin (J/k_B). A field B in Tesla enters as the Zeeman
energy ``h = g * (mu_B / k_B) * B`` with the sign ``+h * sum S_z``, so the
field-favoured state has all spins down.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels

MAX_SPINS = 12
HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-10

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionLimitError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    mu_B_over_kB: float = 0.6717  # K/T

    def __post_init__(self):
        if not self.mu_B_over_kB > 0:
            raise ValueError(f"mu_B/k_B must be positive, got {self.mu_B_over_kB}")


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class SpinChainModel:
    """Open spin-1/2 chain with nearest-neighbour isotropic exchange.

    ``couplings[i]`` couples sites ``i`` and ``i + 1`` (Kelvin, positive is
    antiferromagnetic).
    """

    n_spins: int
    couplings: tuple
    g_factor: float = 2.0
    constants: PhysicalConstants = field(default=DEFAULT_CONSTANTS)
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(c) for c in self.couplings))
        if self.n_spins < 1:
            raise ValueError("n_spins must be positive")
        if self.n_spins > MAX_SPINS:
            raise DimensionLimitError(f"n_spins={self.n_spins} exceeds the limit of {MAX_SPINS}")
        if len(self.couplings) != self.n_spins - 1:
            raise ValueError(
                f"expected {self.n_spins - 1} couplings for {self.n_spins} spins, got {len(self.couplings)}"
            )
        if not self.g_factor > 0:
            raise ValueError("g_factor must be positive")
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")

    @classmethod
    def dimer(cls, J, g=2.0, constants=DEFAULT_CONSTANTS):
        return cls(2, (J,), g, constants)

    @classmethod
    def alternating_dimer(cls, J1, J2, g=2.0, n_spins=4, constants=DEFAULT_CONSTANTS):
        couplings = [J1 if i % 2 == 0 else J2 for i in range(n_spins - 1)]
        return cls(n_spins, tuple(couplings), g, constants)

    @property
    def dimension(self):
        return 1 << self.n_spins

    @property
    def is_dimer(self):
        return self.n_spins == 2

    def zeeman(self, B):
        """Zeeman energy in Kelvin for a field in Tesla (array-friendly)."""
        return self.g_factor * self.constants.mu_B_over_kB * np.asarray(B, dtype=float)

    def field_from_zeeman(self, h):
        return np.asarray(h, dtype=float) / (self.g_factor * self.constants.mu_B_over_kB)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if self.hermitian:
            err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
            if err >= HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
                raise ValueError(f"matrix flagged Hermitian but |A - A^H| = {err:.3g}")
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def _check_dimension(n_spins):
    if n_spins < 1:
        raise ValueError("n_spins must be positive")
    if n_spins > MAX_SPINS:
        raise DimensionLimitError(f"n_spins={n_spins} exceeds the limit of {MAX_SPINS}")


def site_operator(n_spins, site, axis):
    """S^axis = sigma^axis / 2 on ``site``, identity elsewhere."""
    _check_dimension(n_spins)
    if not 0 <= site < n_spins:
        raise IndexError(f"site {site} out of range for {n_spins} spins")
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    op = np.eye(1, dtype=complex)
    for k in range(n_spins):
        op = np.kron(op, 0.5 * _PAULI[axis] if k == site else np.eye(2))
    return OperatorMatrix(op, hermitian=True)


def total_sz(n_spins):
    """Diagonal of sum_i S_z^i in the computational basis."""
    states = np.arange(1 << n_spins)
    ups = n_spins - np.array([bin(s).count("1") for s in states])
    return ups - 0.5 * n_spins


def exchange_operator(n_spins, i, j):
    """S_i . S_j as a dense operator."""
    m = sum(site_operator(n_spins, i, a).matrix @ site_operator(n_spins, j, a).matrix for a in "xyz")
    return OperatorMatrix(m, hermitian=True)


def build_hamiltonian(model, B=0.0):
    if B < 0:
        raise ValueError("field must be non-negative")
    h = float(model.zeeman(B))
    H = kernels.heisenberg_matrix(model.n_spins, np.array(model.couplings), h)
    return OperatorMatrix(H.astype(complex), hermitian=True)


def _canonical_vectors(values, vectors):
    """Fix global phases and order degenerate eigenvectors reproducibly."""
    V = vectors.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            pivot = col[idx[0]]
            V[:, k] = col * (abs(pivot) / pivot)
    order = list(range(len(values)))
    start = 0
    while start < len(values):
        stop = start + 1
        while stop < len(values) and values[stop] - values[start] < DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            # descending lexicographic order of rounded magnitudes
            block.sort(key=lambda k: tuple(-np.round(np.abs(V[:, k]), 10)))
            order[start:stop] = block
        start = stop
    return V[:, order]


def diagonalize(H):
    """Full eigendecomposition, ascending, with reproducible degenerate ordering."""
    if isinstance(H, OperatorMatrix):
        m = H.matrix
    else:
        m = np.asarray(H)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if err >= HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
        raise ValueError(f"non-Hermitian input (|A - A^H| = {err:.3g})")
    values, vectors = np.linalg.eigh(m)
    return Spectrum(values, _canonical_vectors(values, vectors.astype(complex)))


# --------------------------------------------------------------------------
# S_z-sector resolved spectra. The Zeeman term commutes with the exchange
# part, so levels at field h are levels(0) + h * S_z.
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _sector_bond_blocks(n_spins):
    sz = total_sz(n_spins)
    bonds = []
    for i in range(n_spins - 1):
        c = np.zeros(n_spins - 1)
        c[i] = 1.0
        bonds.append(kernels.heisenberg_matrix_numpy(n_spins, c, 0.0))
    blocks = []
    for m in np.unique(sz)[::-1]:
        idx = np.flatnonzero(sz == m)
        blocks.append((float(m), idx, [b[np.ix_(idx, idx)] for b in bonds]))
    return blocks


def sector_levels(model):
    """B = 0 eigenvalues with their total S_z, concatenated over sectors."""
    levels, sz = [], []
    for m, idx, bond_blocks in _sector_bond_blocks(model.n_spins):
        Hb = sum(J * b for J, b in zip(model.couplings, bond_blocks)) if bond_blocks else np.zeros((1, 1))
        e = np.linalg.eigvalsh(Hb)
        levels.append(e)
        sz.append(np.full(e.shape, m))
    return np.concatenate(levels), np.concatenate(sz)


def sector_spectrum(model):
    """Like :func:`sector_levels` but also returns full-space eigenvectors (columns)."""
    dim = model.dimension
    levels, sz, cols = [], [], []
    for m, idx, bond_blocks in _sector_bond_blocks(model.n_spins):
        Hb = sum(J * b for J, b in zip(model.couplings, bond_blocks)) if bond_blocks else np.zeros((1, 1))
        e, v = np.linalg.eigh(Hb)
        full = np.zeros((dim, len(e)), dtype=complex)
        full[idx, :] = v
        levels.append(e)
        sz.append(np.full(e.shape, m))
        cols.append(full)
    return np.concatenate(levels), np.concatenate(sz), np.hstack(cols)


def _sector_minima(model):
    levels, sz = sector_levels(model)
    ms = np.unique(sz)
    return ms, np.array([levels[sz == m].min() for m in ms])


def ground_state_crossings(model, B_range, tolerance=1e-10):
    """Fields where the ground level changes identity (its S_z sector).

    The grid ``B_range`` brackets changes; each bracket is refined by
    bisection until the competing levels are within ``tolerance`` Kelvin.
    """
    B = np.asarray(B_range, dtype=float)
    if B.ndim != 1 or B.size < 2:
        raise ValueError("B_range needs at least two points")
    if np.any(np.diff(B) <= 0):
        raise ValueError("B_range must be strictly increasing")
    ms, e0 = _sector_minima(model)

    def energies(b):
        return e0 + float(model.zeeman(b)) * ms

    def label(b):
        return int(np.argmin(energies(b)))

    def locate(a, b, la, lb, depth=0):
        mid = 0.5 * (a + b)
        e = energies(mid)
        lm = int(np.argmin(e))
        if abs(e[la] - e[lb]) <= tolerance or depth > 200 or b - a < 1e-15:
            return [mid]
        if lm == la:
            return locate(mid, b, la, lb, depth + 1)
        if lm == lb:
            return locate(a, mid, la, lb, depth + 1)
        return locate(a, mid, la, lm, depth + 1) + locate(mid, b, lm, lb, depth + 1)

    crossings = []
    labels = [label(b) for b in B]
    for k in range(B.size - 1):
        if labels[k] != labels[k + 1]:
            crossings.extend(locate(B[k], B[k + 1], labels[k], labels[k + 1]))
    return crossings
