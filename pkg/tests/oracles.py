"""Independent reference implementations used to cross-check the package.

Everything here is deliberately built by a different route than the library
code: Fock kets are occupation dictionaries instead of matrices, the
concurrence goes through scipy matrix square roots instead of eigenvalues of
a product, and quadrature overlaps come from numpy's Hermite polynomials
instead of the package recurrence.  Agreement between these and the library
is then a real check, not a tautology.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla

# ---------------------------------------------------------------------------
# Wootters concurrence via the matrix-square-root definition
# ---------------------------------------------------------------------------

_YY = np.array(
    [
        [0, 0, 0, -1],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [-1, 0, 0, 0],
    ],
    dtype=np.complex128,
)


def wootters_concurrence(rho: np.ndarray) -> float:
    """C = max(0, l1 - l2 - l3 - l4) with l the decreasing eigenvalues of
    R = sqrt( sqrt(rho) rho_tilde sqrt(rho) )."""
    rho = np.asarray(rho, dtype=np.complex128)
    tilde = _YY @ rho.conj() @ _YY
    s = sla.sqrtm(rho)
    r = sla.sqrtm(s @ tilde @ s)
    r = 0.5 * (r + r.conj().T)
    lam = np.sort(np.linalg.eigvalsh(r).real)[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()


# ---------------------------------------------------------------------------
# random states
# ---------------------------------------------------------------------------


def random_pure(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    return v / np.linalg.norm(v)


def random_density(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    weights = rng.dirichlet(np.ones(rank))
    rho = np.zeros((4, 4), dtype=np.complex128)
    for w in weights:
        psi = random_pure(rng)
        rho += w * np.outer(psi, psi.conj())
    return rho


def random_single_qubit_unitary(rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# ---------------------------------------------------------------------------
# dictionary-Fock model of the one-interval decay matrix
#
# Kets are {occupation tuple: amplitude} maps; creation operators act by
# shifting occupations, so no truncation or matrix representation enters.
# ---------------------------------------------------------------------------


def _vac(n_modes: int) -> dict:
    return {(0,) * n_modes: 1.0 + 0.0j}


def _create(ket: dict, mode: int) -> dict:
    out: dict = {}
    for occ, amp in ket.items():
        lifted = list(occ)
        lifted[mode] += 1
        key = tuple(lifted)
        out[key] = out.get(key, 0.0j) + amp * np.sqrt(lifted[mode])
    return out


def _axpy(out: dict, ket: dict, z: complex) -> dict:
    for occ, amp in ket.items():
        out[occ] = out.get(occ, 0.0j) + z * amp
    return out


def oracle_vacuum_kets(setup, lossy: bool) -> dict:
    """{(row, col): ket} for each nonzero qubit block applied to field vacuum.

    Mode order matches the library: (3, 4) without loss, (3s, 4s, 3l, 4l)
    with the loss splitters in place.
    """
    eps = setup.gamma * setup.dt
    n_modes = 4 if lossy else 2

    if lossy:
        def ad3(ket):
            out: dict = {}
            _axpy(out, _create(ket, 0), np.sqrt(setup.eta3))
            _axpy(out, _create(ket, 2), np.sqrt(1.0 - setup.eta3))
            return out

        def ad4(ket):
            out: dict = {}
            _axpy(out, _create(ket, 1), np.sqrt(setup.eta4))
            _axpy(out, _create(ket, 3), np.sqrt(1.0 - setup.eta4))
            return out
    else:
        def ad3(ket):
            return _create(ket, 0)

        def ad4(ket):
            return _create(ket, 1)

    p3, p4 = np.exp(1j * setup.phi3), np.exp(1j * setup.phi4)

    def ad1(ket):
        out: dict = {}
        _axpy(out, ad3(ket), p3 / np.sqrt(2.0))
        _axpy(out, ad4(ket), p4 / np.sqrt(2.0))
        return out

    def ad2(ket):
        out: dict = {}
        _axpy(out, ad3(ket), p3 / np.sqrt(2.0))
        _axpy(out, ad4(ket), -p4 / np.sqrt(2.0))
        return out

    vac = _vac(n_modes)
    kets = {
        (0, 0): _axpy({}, vac, 1.0 - eps),
        (1, 1): _axpy({}, vac, np.sqrt(1.0 - eps)),
        (2, 2): _axpy({}, vac, np.sqrt(1.0 - eps)),
        (3, 3): _axpy({}, vac, 1.0),
        (1, 0): _axpy({}, ad2(vac), np.sqrt(eps * (1.0 - eps))),
        (2, 0): _axpy({}, ad1(vac), np.sqrt(eps * (1.0 - eps))),
        (3, 0): _axpy({}, ad1(ad2(vac)), eps),
        (3, 1): _axpy({}, ad1(vac), np.sqrt(eps)),
        (3, 2): _axpy({}, ad2(vac), np.sqrt(eps)),
    }
    return kets


def oracle_pd_probabilities(psi: np.ndarray, setup) -> dict:
    """{(n3, n4): probability} of the detected click pattern for one interval,
    any efficiency, by brute-force enumeration of the field amplitudes."""
    lossy = not (setup.eta3 == 1.0 and setup.eta4 == 1.0)
    kets = oracle_vacuum_kets(setup, lossy)
    # amplitude arriving in qubit row r with field occupation occ
    field: dict = {}
    for (r, c), ket in kets.items():
        for occ, amp in ket.items():
            key = (r, occ)
            field[key] = field.get(key, 0.0j) + amp * psi[c]
    probs: dict = {}
    for (r, occ), amp in field.items():
        sig = (occ[0], occ[1])
        probs[sig] = probs.get(sig, 0.0) + abs(amp) ** 2
    return probs


def hermite_overlap(x: float, n: int) -> float:
    """<x|n> from numpy's physicists' Hermite polynomial: H_n(x) e^(-x^2/2)
    / sqrt(2^n n! sqrt(pi))."""
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    h = np.polynomial.hermite.hermval(x, coeffs)
    norm = np.sqrt(2.0**n * float(math.factorial(n)) * np.sqrt(np.pi))
    return float(h) * np.exp(-0.5 * x * x) / norm


def oracle_hom_kraus(setup, x: float, y: float) -> np.ndarray:
    """Ideal-monitoring quadrature Kraus matrix <X Y| M |vac>, including the
    vacuum Gaussian factor, from the dictionary kets."""
    kets = oracle_vacuum_kets(setup, lossy=False)
    out = np.zeros((4, 4), dtype=np.complex128)
    for (r, c), ket in kets.items():
        for (n3, n4), amp in ket.items():
            out[r, c] += amp * hermite_overlap(x, n3) * hermite_overlap(y, n4)
    return out


# ---------------------------------------------------------------------------
# unconditioned channel: two independent amplitude-damping channels
# ---------------------------------------------------------------------------


def damping_pair_channel(rho: np.ndarray, eps: float) -> np.ndarray:
    """(AD_eps x AD_eps)(rho): what one interval does on average."""
    k0 = np.array([[np.sqrt(1.0 - eps), 0.0], [0.0, 1.0]], dtype=np.complex128)
    k1 = np.array([[0.0, 0.0], [np.sqrt(eps), 0.0]], dtype=np.complex128)
    out = np.zeros((4, 4), dtype=np.complex128)
    for ka in (k0, k1):
        for kb in (k0, k1):
            full = np.kron(ka, kb)
            out += full @ rho @ full.conj().T
    return out


def lindblad_euler_step(rho: np.ndarray, eps: float) -> np.ndarray:
    """First-order dissipator step rho + eps * sum_i D[sm_i](rho)."""
    sm = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    out = rho.astype(np.complex128).copy()
    for op in (np.kron(sm, eye), np.kron(eye, sm)):
        nn = op.conj().T @ op
        out += eps * (op @ rho @ op.conj().T - 0.5 * (nn @ rho + rho @ nn))
    return out


# ---------------------------------------------------------------------------
# scripted random generator for replaying pre-drawn streams
# ---------------------------------------------------------------------------


class ScriptedRng:
    """Feeds back a pre-drawn random stream through the Generator methods the
    measurement steps use, so a step sequence can be replayed exactly."""

    def __init__(self, uniforms=(), normals=()):
        self._uniforms = list(uniforms)
        self._normals = list(normals)

    def random(self, size=None):
        if size is not None:
            raise NotImplementedError
        return self._uniforms.pop(0)

    def standard_normal(self, size=None):
        if size == 2:
            return np.asarray(self._normals.pop(0), dtype=float)
        raise NotImplementedError
