"""Compiled trajectory loops.

These kernels re-implement the per-interval updates of measurement.py and
feedback.py as tight loops over pre-drawn random numbers.  Randomness is
consumed in exactly the order the reference steps draw it (one uniform per
photon-counting interval, one normal pair per homodyne interval), so a
kernel trajectory and a composition of reference steps driven by the same
seeded generator agree to rounding.

Policy encoding shared with ensemble.py:
    0 = none, 1 = photon-counting recycle, 2 = weak unitary,
    3 = weak unitary plus scheduled collective flips.
Status return: 0 on success, k + 1 if outcome probabilities drifted or a
norm turned nonpositive at step k, -(k + 1) if the feedback weight became
singular at step k.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .measurement import DRIFT_TOLERANCE

# clicks registered by each photon-counting outcome index,
# ordered as PD_OUTCOMES = ((0,0), (1,0), (0,1), (2,0), (0,2))
_CLICKS = np.array([0, 1, 1, 2, 2], dtype=np.int64)

# collective flip (a,b,c,d) -> (d,-c,-b,a): permutation and signs
_PBOTH = np.array([3, 2, 1, 0], dtype=np.int64)
_SBOTH = np.array([1.0, -1.0, -1.0, 1.0])
# single flip on qubit A, (a,b,c,d) -> (c,d,-a,-b)
_PA = np.array([2, 3, 0, 1], dtype=np.int64)
_SA = np.array([1.0, 1.0, -1.0, -1.0])


@njit(cache=True)
def _flip_pure(psi, perm, sign):
    out = np.empty(4, dtype=np.complex128)
    for i in range(4):
        out[i] = sign[i] * psi[perm[i]]
    return out


@njit(cache=True)
def _flip_rho(rho, perm, sign):
    out = np.empty((4, 4), dtype=np.complex128)
    for i in range(4):
        for j in range(4):
            out[i, j] = sign[i] * sign[j] * rho[perm[i], perm[j]]
    return out


@njit(cache=True)
def _concurrence_pure(psi):
    v = psi[0] * psi[3] - psi[1] * psi[2]
    return 2.0 * np.abs(v)


@njit(cache=True)
def _wootters(rho):
    # roots as singular values of sqrt(rho) (sy x sy) conj(sqrt(rho));
    # left-multiplying by (sy x sy) reverses the rows with signs
    # s = (-1, 1, 1, -1).  Singular values keep machine accuracy where
    # square roots of eigenvalues of rho * rho_tilde lose half the digits
    # on the near-zero roots.
    evals, evecs = np.linalg.eigh(rho)
    scaled = np.empty((4, 4), dtype=np.complex128)
    for j in range(4):
        w = np.sqrt(evals[j]) if evals[j] > 0.0 else 0.0
        for i in range(4):
            scaled[i, j] = evecs[i, j] * w
    root = np.dot(scaled, np.conj(evecs).T)
    flipped = np.empty((4, 4), dtype=np.complex128)
    for i in range(4):
        si = -1.0 if (i == 0 or i == 3) else 1.0
        for j in range(4):
            flipped[i, j] = si * np.conj(root[3 - i, j])
    sv = np.linalg.svd(np.dot(root, flipped))[1]
    c = sv[0] - sv[1] - sv[2] - sv[3]
    return c if c > 0.0 else 0.0


@njit(cache=True)
def _record_pure(psi, r, c_out, purity_out, elems_out):
    c_out[r] = _concurrence_pure(psi)
    purity_out[r] = 1.0
    elems_out[r, 0] = psi[0].real ** 2 + psi[0].imag ** 2
    elems_out[r, 1] = psi[3].real ** 2 + psi[3].imag ** 2
    elems_out[r, 2] = (psi[0] * np.conj(psi[3])).real


@njit(cache=True)
def _record_mixed(rho, r, c_out, purity_out, elems_out):
    c_out[r] = _wootters(rho)
    p = 0.0
    for i in range(4):
        for j in range(4):
            p += (rho[i, j] * rho[j, i]).real
    purity_out[r] = p
    elems_out[r, 0] = rho[0, 0].real
    elems_out[r, 1] = rho[3, 3].real
    elems_out[r, 2] = rho[0, 3].real


@njit(cache=True)
def _su2(alpha, beta):
    """exp(i (alpha sx + beta sy)) as an explicit 2x2."""
    u = np.empty((2, 2), dtype=np.complex128)
    m = np.hypot(alpha, beta)
    if m == 0.0:
        u[0, 0] = 1.0
        u[0, 1] = 0.0
        u[1, 0] = 0.0
        u[1, 1] = 1.0
        return u
    f = np.sin(m) / m
    cm = np.cos(m)
    u[0, 0] = cm
    u[0, 1] = f * (beta + 1j * alpha)
    u[1, 0] = f * (-beta + 1j * alpha)
    u[1, 1] = cm
    return u


@njit(cache=True)
def _apply_local_pure(ua, ub, psi):
    """psi as a 2x2 (row = qubit A), mapped by ua (x) ub."""
    t00 = ua[0, 0] * psi[0] + ua[0, 1] * psi[2]
    t01 = ua[0, 0] * psi[1] + ua[0, 1] * psi[3]
    t10 = ua[1, 0] * psi[0] + ua[1, 1] * psi[2]
    t11 = ua[1, 0] * psi[1] + ua[1, 1] * psi[3]
    out = np.empty(4, dtype=np.complex128)
    out[0] = t00 * ub[0, 0] + t01 * ub[0, 1]
    out[1] = t00 * ub[1, 0] + t01 * ub[1, 1]
    out[2] = t10 * ub[0, 0] + t11 * ub[0, 1]
    out[3] = t10 * ub[1, 0] + t11 * ub[1, 1]
    return out


@njit(cache=True)
def _apply_local_rho(ua, ub, rho):
    full = np.empty((4, 4), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    full[2 * i + j, 2 * k + l] = ua[i, k] * ub[j, l]
    return np.dot(np.dot(full, rho), np.conj(full).T)


@njit(cache=True)
def pd_pure_kernel(
    psi0,
    ops,
    uniforms,
    kind,
    stride,
    record_states,
    record_outcomes,
    c_out,
    purity_out,
    elems_out,
    states_out,
    outcome_out,
):
    """Photon-counting trajectory on a pure state.

    ops is the (5, 4, 4) ideal Kraus stack; kind 0 runs bare monitoring,
    kind 1 the recycle policy (single click -> flip A, double click ->
    collective reset, alternating collective flips between clicks).
    """
    psi = psi0.copy()
    n_steps = uniforms.shape[0]
    _record_pure(psi, 0, c_out, purity_out, elems_out)
    if record_states == 1:
        states_out[0] = psi
    phase = 0  # 0 awaiting first click, 1 in cycle
    parity = 0
    r = 0
    probs = np.empty(5)
    for k in range(n_steps):
        total = 0.0
        for m in range(5):
            p = 0.0
            for i in range(4):
                acc = ops[m, i, 0] * psi[0]
                for j in range(1, 4):
                    acc += ops[m, i, j] * psi[j]
                p += acc.real * acc.real + acc.imag * acc.imag
            probs[m] = p
            total += p
        if np.abs(total - 1.0) > DRIFT_TOLERANCE:
            return k + 1
        u = uniforms[k] * total
        sel = 4
        acc_p = 0.0
        for m in range(5):
            acc_p += probs[m]
            if acc_p >= u:
                sel = m
                break
        post = np.dot(ops[sel], psi)
        norm = np.sqrt(
            post[0].real ** 2 + post[0].imag ** 2
            + post[1].real ** 2 + post[1].imag ** 2
            + post[2].real ** 2 + post[2].imag ** 2
            + post[3].real ** 2 + post[3].imag ** 2
        )
        if not norm > 0.0:
            return k + 1
        psi = post / norm
        if record_outcomes == 1:
            outcome_out[k] = sel
        if kind == 1:
            clicks = _CLICKS[sel]
            if clicks == 1:
                psi = _flip_pure(psi, _PA, _SA)
                phase = 1
                parity = 0
            elif clicks == 2:
                psi = _flip_pure(psi, _PBOTH, _SBOTH)
                phase = 0
                parity = 0
            elif phase == 1:
                if parity == 1:
                    psi = _flip_pure(psi, _PBOTH, _SBOTH)
                    parity = 0
                else:
                    parity = 1
        if (k + 1) % stride == 0:
            r += 1
            _record_pure(psi, r, c_out, purity_out, elems_out)
            if record_states == 1:
                states_out[r] = psi
    return 0


@njit(cache=True)
def pd_mixed_kernel(
    rho0,
    effects,
    ops,
    uniforms,
    kind,
    stride,
    record_states,
    record_outcomes,
    c_out,
    purity_out,
    elems_out,
    states_out,
    outcome_out,
):
    """Photon-counting trajectory at finite efficiency.

    effects is the (5, 4, 4) loss-summed POVM stack for the observable
    signals; ops is (5 signals, 5 loss occupations, 4, 4) and the posterior
    sums the conjugations over the loss index.
    """
    rho = rho0.copy()
    n_steps = uniforms.shape[0]
    _record_mixed(rho, 0, c_out, purity_out, elems_out)
    if record_states == 1:
        states_out[0] = rho
    phase = 0
    parity = 0
    r = 0
    probs = np.empty(5)
    for k in range(n_steps):
        total = 0.0
        for m in range(5):
            p = 0.0
            for a in range(4):
                for b in range(4):
                    p += (effects[m, a, b] * rho[b, a]).real
            probs[m] = p
            total += p
        if np.abs(total - 1.0) > DRIFT_TOLERANCE:
            return k + 1
        u = uniforms[k] * total
        sel = 4
        acc_p = 0.0
        for m in range(5):
            acc_p += probs[m]
            if acc_p >= u:
                sel = m
                break
        post = np.zeros((4, 4), dtype=np.complex128)
        for l in range(5):
            t = np.dot(ops[sel, l], rho)
            post += np.dot(t, np.conj(ops[sel, l]).T)
        tr = post[0, 0].real + post[1, 1].real + post[2, 2].real + post[3, 3].real
        if not tr > 0.0:
            return k + 1
        rho = post / tr
        if record_outcomes == 1:
            outcome_out[k] = sel
        if kind == 1:
            clicks = _CLICKS[sel]
            if clicks == 1:
                rho = _flip_rho(rho, _PA, _SA)
                phase = 1
                parity = 0
            elif clicks == 2:
                rho = _flip_rho(rho, _PBOTH, _SBOTH)
                phase = 0
                parity = 0
            elif phase == 1:
                if parity == 1:
                    rho = _flip_rho(rho, _PBOTH, _SBOTH)
                    parity = 0
                else:
                    parity = 1
        if (k + 1) % stride == 0:
            r += 1
            _record_mixed(rho, r, c_out, purity_out, elems_out)
            if record_states == 1:
                states_out[r] = rho
    return 0


@njit(cache=True)
def hom_pure_kernel(
    psi0,
    basis,
    s3,
    s4,
    normals,
    kind,
    flip_period,
    t_activate,
    dt,
    gamma,
    eta3,
    eta4,
    stride,
    record_states,
    record_outcomes,
    c_out,
    purity_out,
    elems_out,
    states_out,
    readout_out,
):
    """Ideal dual-homodyne trajectory on a pure state.

    basis is the (5, 4, 4) polynomial Kraus stack in (1, X, Y, X^2, Y^2);
    s3, s4 set the readout means.  kind 2 applies the weak feedback unitary
    each interval, kind 3 additionally the scheduled collective flips (on
    step indices divisible by flip_period once the end time passes
    t_activate).  The feedback weight uses the pre-measurement populations.
    """
    psi = psi0.copy()
    n_steps = normals.shape[0]
    _record_pure(psi, 0, c_out, purity_out, elems_out)
    if record_states == 1:
        states_out[0] = psi
    r = 0
    sigma = 1.0 / np.sqrt(dt)
    xy_scale = np.sqrt(dt / 2.0)
    fb_scale = dt * np.sqrt(gamma / 2.0)
    sq_eta3 = np.sqrt(eta3)
    sq_eta4 = np.sqrt(eta4)
    for k in range(n_steps):
        v3 = np.dot(s3, psi)
        v4 = np.dot(s4, psi)
        m3 = 0.0
        m4 = 0.0
        for i in range(4):
            m3 += (np.conj(psi[i]) * v3[i]).real
            m4 += (np.conj(psi[i]) * v4[i]).real
        p_ee = psi[0].real ** 2 + psi[0].imag ** 2
        p_gg = psi[3].real ** 2 + psi[3].imag ** 2
        r3 = m3 + sigma * normals[k, 0]
        r4 = m4 + sigma * normals[k, 1]
        if record_outcomes == 1:
            readout_out[k, 0] = r3
            readout_out[k, 1] = r4
        x = r3 * xy_scale
        y = r4 * xy_scale
        post = np.empty(4, dtype=np.complex128)
        for i in range(4):
            acc = 0.0 + 0.0j
            for j in range(4):
                op_ij = (
                    basis[0, i, j]
                    + basis[1, i, j] * x
                    + basis[2, i, j] * y
                    + basis[3, i, j] * x * x
                    + basis[4, i, j] * y * y
                )
                acc += op_ij * psi[j]
            post[i] = acc
        norm2 = 0.0
        for i in range(4):
            norm2 += post[i].real ** 2 + post[i].imag ** 2
        if not norm2 > 0.0:
            return k + 1
        psi = post / np.sqrt(norm2)
        if kind >= 2:
            root_sum = np.sqrt(p_ee) + np.sqrt(p_gg)
            if root_sum < 1e-9:
                return -(k + 1)
            w = np.sqrt(p_ee) / root_sum
            c3 = fb_scale * w * sq_eta3 * r3
            c4 = fb_scale * w * sq_eta4 * r4
            ua = _su2(-c4, c3)
            ub = _su2(c4, c3)
            psi = _apply_local_pure(ua, ub, psi)
            if kind == 3 and (k + 1) % flip_period == 0:
                if (k + 1) * dt >= t_activate - 1e-12:
                    psi = _flip_pure(psi, _PBOTH, _SBOTH)
        if (k + 1) % stride == 0:
            r += 1
            _record_pure(psi, r, c_out, purity_out, elems_out)
            if record_states == 1:
                states_out[r] = psi
    return 0


@njit(cache=True)
def hom_mixed_kernel(
    rho0,
    bases,
    s3,
    s4,
    normals,
    kind,
    flip_period,
    t_activate,
    dt,
    gamma,
    eta3,
    eta4,
    stride,
    record_states,
    record_outcomes,
    c_out,
    purity_out,
    elems_out,
    states_out,
    readout_out,
):
    """Finite-efficiency dual-homodyne trajectory.

    bases is (5 loss occupations, 5 polynomial terms, 4, 4); the posterior
    sums the quadrature Kraus conjugations over the loss index.
    """
    rho = rho0.copy()
    n_steps = normals.shape[0]
    _record_mixed(rho, 0, c_out, purity_out, elems_out)
    if record_states == 1:
        states_out[0] = rho
    r = 0
    sigma = 1.0 / np.sqrt(dt)
    xy_scale = np.sqrt(dt / 2.0)
    fb_scale = dt * np.sqrt(gamma / 2.0)
    sq_eta3 = np.sqrt(eta3)
    sq_eta4 = np.sqrt(eta4)
    op_l = np.empty((4, 4), dtype=np.complex128)
    for k in range(n_steps):
        m3 = 0.0
        m4 = 0.0
        for i in range(4):
            for j in range(4):
                m3 += (rho[i, j] * s3[j, i]).real
                m4 += (rho[i, j] * s4[j, i]).real
        p_ee = rho[0, 0].real
        p_gg = rho[3, 3].real
        r3 = m3 + sigma * normals[k, 0]
        r4 = m4 + sigma * normals[k, 1]
        if record_outcomes == 1:
            readout_out[k, 0] = r3
            readout_out[k, 1] = r4
        x = r3 * xy_scale
        y = r4 * xy_scale
        post = np.zeros((4, 4), dtype=np.complex128)
        for l in range(5):
            for i in range(4):
                for j in range(4):
                    op_l[i, j] = (
                        bases[l, 0, i, j]
                        + bases[l, 1, i, j] * x
                        + bases[l, 2, i, j] * y
                        + bases[l, 3, i, j] * x * x
                        + bases[l, 4, i, j] * y * y
                    )
            t = np.dot(op_l, rho)
            post += np.dot(t, np.conj(op_l).T)
        tr = post[0, 0].real + post[1, 1].real + post[2, 2].real + post[3, 3].real
        if not tr > 0.0:
            return k + 1
        rho = post / tr
        if kind >= 2:
            root_sum = np.sqrt(max(p_ee, 0.0)) + np.sqrt(max(p_gg, 0.0))
            if root_sum < 1e-9:
                return -(k + 1)
            w = np.sqrt(max(p_ee, 0.0)) / root_sum
            c3 = fb_scale * w * sq_eta3 * r3
            c4 = fb_scale * w * sq_eta4 * r4
            ua = _su2(-c4, c3)
            ub = _su2(c4, c3)
            rho = _apply_local_rho(ua, ub, rho)
            if kind == 3 and (k + 1) % flip_period == 0:
                if (k + 1) * dt >= t_activate - 1e-12:
                    rho = _flip_rho(rho, _PBOTH, _SBOTH)
        if (k + 1) % stride == 0:
            r += 1
            _record_mixed(rho, r, c_out, purity_out, elems_out)
            if record_states == 1:
                states_out[r] = rho
    return 0
