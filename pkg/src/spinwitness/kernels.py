"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``SPINWITNESS_DISABLE_NUMBA``
is unset (or ``0``). Both paths are always importable as ``*_numpy`` and
``*_numba`` so tests and the benchmark can compare them directly.

Basis convention: site 0 is the most significant bit, bit value 0 is spin up
(S_z = +1/2). This matches ``np.kron`` ordering with |up> = (1, 0).
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SPINWITNESS_DISABLE_NUMBA", "0") in ("", "0")


# --------------------------------------------------------------------------
# Heisenberg chain matrix
# --------------------------------------------------------------------------

def heisenberg_matrix_numpy(n_spins, couplings, h):
    """Dense open-chain Heisenberg matrix with Zeeman term ``h * sum S_z``."""
    dim = 1 << n_spins
    states = np.arange(dim)
    shifts = n_spins - 1 - np.arange(n_spins)
    bits = (states[:, None] >> shifts[None, :]) & 1
    sz = 0.5 - bits  # (dim, n)
    H = np.zeros((dim, dim))
    diag = h * sz.sum(axis=1)
    for i, J in enumerate(couplings):
        diag = diag + J * sz[:, i] * sz[:, i + 1]
        differ = bits[:, i] != bits[:, i + 1]
        flipped = states ^ ((1 << shifts[i]) | (1 << shifts[i + 1]))
        H[states[differ], flipped[differ]] += 0.5 * J
    H[states, states] += diag
    return H


def _heisenberg_matrix_loop(n_spins, couplings, h):
    dim = 1 << n_spins
    H = np.zeros((dim, dim))
    for s in range(dim):
        diag = 0.0
        for i in range(n_spins):
            bit = (s >> (n_spins - 1 - i)) & 1
            diag += h * (0.5 - bit)
        for i in range(n_spins - 1):
            p = n_spins - 1 - i
            q = p - 1
            bi = (s >> p) & 1
            bj = (s >> q) & 1
            J = couplings[i]
            if bi == bj:
                diag += 0.25 * J
            else:
                diag -= 0.25 * J
                t = s ^ ((1 << p) | (1 << q))
                H[t, s] += 0.5 * J
        H[s, s] += diag
    return H


# --------------------------------------------------------------------------
# Thermal moments on a (T, h) grid from B = 0 levels with definite S_z
# --------------------------------------------------------------------------

def thermal_moments_numpy(levels, sz, temps, fields):
    """Boltzmann moments on the outer grid ``temps x fields``.

    ``levels`` are B = 0 energies (Kelvin) with total-S_z quantum numbers
    ``sz``; at Zeeman energy h the level is ``levels + h * sz``. Returns
    ``(mean_sz, mean_sz2, mean_energy)`` each of shape ``(len(temps), len(fields))``.
    Energies include the Zeeman part.
    """
    levels = np.asarray(levels, dtype=float)
    sz = np.asarray(sz, dtype=float)
    temps = np.atleast_1d(np.asarray(temps, dtype=float))
    fields = np.atleast_1d(np.asarray(fields, dtype=float))
    E = levels[None, None, :] + fields[None, :, None] * sz[None, None, :]
    x = -E / temps[:, None, None]
    x -= x.max(axis=2, keepdims=True)
    w = np.exp(x)
    Z = w.sum(axis=2)
    m1 = (w * sz).sum(axis=2) / Z
    m2 = (w * sz * sz).sum(axis=2) / Z
    u = (w * E).sum(axis=2) / Z
    return m1, m2, u


def _thermal_moments_loop(levels, sz, temps, fields):
    nt = temps.shape[0]
    nb = fields.shape[0]
    nk = levels.shape[0]
    m1 = np.empty((nt, nb))
    m2 = np.empty((nt, nb))
    u = np.empty((nt, nb))
    E = np.empty(nk)
    for a in range(nt):
        beta = 1.0 / temps[a]
        for b in range(nb):
            emin = np.inf
            for k in range(nk):
                E[k] = levels[k] + fields[b] * sz[k]
                if E[k] < emin:
                    emin = E[k]
            Z = 0.0
            s1 = 0.0
            s2 = 0.0
            se = 0.0
            for k in range(nk):
                w = np.exp(-(E[k] - emin) * beta)
                Z += w
                s1 += w * sz[k]
                s2 += w * sz[k] * sz[k]
                se += w * E[k]
            m1[a, b] = s1 / Z
            m2[a, b] = s2 / Z
            u[a, b] = se / Z
    return m1, m2, u


# --------------------------------------------------------------------------
# Partial trace onto an ordered subset of sites
# --------------------------------------------------------------------------

def partial_trace_numpy(rho, n_spins, keep):
    keep = [int(k) for k in keep]
    rest = [k for k in range(n_spins) if k not in keep]
    t = rho.reshape((2,) * (2 * n_spins))
    perm = keep + rest + [n_spins + k for k in keep] + [n_spins + k for k in rest]
    t = t.transpose(perm)
    dk = 1 << len(keep)
    dr = 1 << len(rest)
    t = t.reshape(dk, dr, dk, dr)
    return np.trace(t, axis1=1, axis2=3)


def _partial_trace_loop(rho, n_spins, keep):
    nk = keep.shape[0]
    nr = n_spins - nk
    rest = np.empty(nr, dtype=np.int64)
    c = 0
    for site in range(n_spins):
        found = False
        for j in range(nk):
            if keep[j] == site:
                found = True
        if not found:
            rest[c] = site
            c += 1
    dk = 1 << nk
    dr = 1 << nr
    # full index of (kept bits, traced bits)
    index = np.zeros((dk, dr), dtype=np.int64)
    for r in range(dk):
        for t in range(dr):
            full = 0
            for j in range(nk):
                bit = (r >> (nk - 1 - j)) & 1
                full |= bit << (n_spins - 1 - keep[j])
            for j in range(nr):
                bit = (t >> (nr - 1 - j)) & 1
                full |= bit << (n_spins - 1 - rest[j])
            index[r, t] = full
    out = np.zeros((dk, dk), dtype=np.complex128)
    for r in range(dk):
        for c2 in range(dk):
            acc = 0.0 + 0.0j
            for t in range(dr):
                acc += rho[index[r, t], index[c2, t]]
            out[r, c2] = acc
    return out


if HAVE_NUMBA:
    _heisenberg_matrix_jit = njit(cache=True)(_heisenberg_matrix_loop)
    _thermal_moments_jit = njit(cache=True)(_thermal_moments_loop)
    _partial_trace_jit = njit(cache=True)(_partial_trace_loop)

    def heisenberg_matrix_numba(n_spins, couplings, h):
        return _heisenberg_matrix_jit(int(n_spins), np.asarray(couplings, dtype=np.float64), float(h))

    def thermal_moments_numba(levels, sz, temps, fields):
        return _thermal_moments_jit(
            np.ascontiguousarray(levels, dtype=np.float64),
            np.ascontiguousarray(sz, dtype=np.float64),
            np.ascontiguousarray(np.atleast_1d(temps), dtype=np.float64),
            np.ascontiguousarray(np.atleast_1d(fields), dtype=np.float64),
        )

    def partial_trace_numba(rho, n_spins, keep):
        return _partial_trace_jit(
            np.ascontiguousarray(rho, dtype=np.complex128),
            int(n_spins),
            np.asarray(keep, dtype=np.int64),
        )
else:  # pragma: no cover
    heisenberg_matrix_numba = heisenberg_matrix_numpy
    thermal_moments_numba = thermal_moments_numpy
    partial_trace_numba = partial_trace_numpy


if USE_NUMBA:
    heisenberg_matrix = heisenberg_matrix_numba
    thermal_moments = thermal_moments_numba
    partial_trace_kernel = partial_trace_numba
else:
    heisenberg_matrix = heisenberg_matrix_numpy
    thermal_moments = thermal_moments_numpy
    partial_trace_kernel = partial_trace_numpy


def backend():
    return "numba" if USE_NUMBA else "numpy"
