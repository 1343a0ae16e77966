"""Orbit tracing: fixed-step RK4 with bisection event detection.

Plug fields are integrated in cylindrical coordinates (r, theta, z) by a
numba kernel (this keeps r exactly conserved for purely rotational
fields and is fast enough for very long trapped orbits).  Grid-sampled
or callable fields use a plain Cartesian tracer.

Exit codes shared by both tracers:
    0 = exited through the plane z = z_exit,
    1 = budget exhausted inside the domain (trapped),
    2 = left through the lateral boundary.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# --- smooth bumps -----------------------------------------------------------
# bump(u) = exp(1 - 1/(1-u^2)) on |u|<1, sup = 1 at u = 0.
# bump4 is the flat-topped variant exp(1 - 1/(1-u^4)) whose first three
# derivatives vanish at the peak.


@njit(cache=True)
def bump(u):
    if abs(u) >= 1.0:
        return 0.0
    return np.exp(1.0 - 1.0 / (1.0 - u * u))


@njit(cache=True)
def bump_d1(u):
    if abs(u) >= 1.0:
        return 0.0
    w = 1.0 - u * u
    return -2.0 * u / (w * w) * np.exp(1.0 - 1.0 / w)


@njit(cache=True)
def bump4(u):
    if abs(u) >= 1.0:
        return 0.0
    u4 = u * u * u * u
    return np.exp(1.0 - 1.0 / (1.0 - u4))


@njit(cache=True)
def bump4_d1(u):
    if abs(u) >= 1.0:
        return 0.0
    u4 = u * u * u * u
    w = 1.0 - u4
    return -4.0 * u * u * u / (w * w) * np.exp(1.0 - 1.0 / w)


@njit(cache=True)
def bump4_d2(u):
    if abs(u) >= 1.0:
        return 0.0
    u2 = u * u
    u3 = u2 * u
    u4 = u2 * u2
    w = 1.0 - u4
    e = np.exp(1.0 - 1.0 / w)
    # d/du [ -4u^3/w^2 * e ] = e * ( -12u^2/w^2 - 32u^6/w^3 + 16u^6/w^4 )
    return e * (-12.0 * u2 / (w * w) - 32.0 * u3 * u3 / (w ** 3) + 16.0 * u3 * u3 / (w ** 4))


# --- plug field kernels -----------------------------------------------------
# Parameter packing (shared by both variants):
#   P = [r_star, z_star, delta_r, delta_z, amplitude, c0, chi_quad]
# where c0 / chi_quad are only read by the stream variant.

VARIANT_WILSON = 0
VARIANT_STREAM = 1


@njit(cache=True)
def _odd_profile(z, z_star, dz):
    """s(z) = sign(z) * bump((|z| - z_star)/dz); odd, +-1 at z = +-z_star."""
    if z > 0.0:
        return bump((z - z_star) / dz)
    elif z < 0.0:
        return -bump((-z - z_star) / dz)
    return 0.0


@njit(cache=True)
def _odd_profile_d1(z, z_star, dz):
    # derivative of the odd profile; even in z, 0 near z = 0 for dz < z_star
    if z > 0.0:
        return bump_d1((z - z_star) / dz) / dz
    elif z < 0.0:
        return bump_d1((-z - z_star) / dz) / dz
    return 0.0


@njit(cache=True)
def _chi(r, P):
    """Radial profile of the stream function: bump envelope times the
    quadratic with chi(r*) = c0, chi'(r*) = r*, chi''(r*) = 1 + m."""
    u = r - P[0]
    b = bump(u / P[2])
    return b * (P[5] + P[0] * u + P[6] * u * u)


@njit(cache=True)
def _chi_d1(r, P):
    u = r - P[0]
    b = bump(u / P[2])
    bp = bump_d1(u / P[2]) / P[2]
    return bp * (P[5] + P[0] * u + P[6] * u * u) + b * (P[0] + 2.0 * P[6] * u)


@njit(cache=True)
def _w_even(z, P):
    """Flat-topped even profile: peaks of height 1 at z = +-z_star."""
    return bump4((z - P[1]) / P[3]) + bump4((z + P[1]) / P[3])


@njit(cache=True)
def _w_even_d1(z, P):
    return (bump4_d1((z - P[1]) / P[3]) + bump4_d1((z + P[1]) / P[3])) / P[3]


@njit(cache=True)
def _w_even_d2(z, P):
    return (bump4_d2((z - P[1]) / P[3]) + bump4_d2((z + P[1]) / P[3])) / (P[3] * P[3])


@njit(cache=True)
def velocity_cyl(variant, P, r, z):
    """Cylindrical velocity (rdot, thetadot, zdot) of the plug field."""
    if variant == VARIANT_WILSON:
        h_r = bump((r - P[0]) / P[2])
        k = bump((z - P[1]) / P[3]) + bump((z + P[1]) / P[3])
        g = 1.0 - h_r * k
        f = P[4] * h_r * _odd_profile(z, P[1], P[3])
        return 0.0, f, g
    else:
        rdot = _chi(r, P) * _w_even_d1(z, P) / r
        zdot = 1.0 - _chi_d1(r, P) * _w_even(z, P) / r
        f = P[4] * bump((r - P[0]) / P[2]) * _odd_profile(z, P[1], P[3])
        return rdot, f, zdot


@njit(cache=True)
def curl_cyl(variant, P, r, z):
    """Physical cylindrical components (curl_r, curl_theta, curl_z) of the
    Euclidean curl of the plug field (u_theta = f * r)."""
    u = (r - P[0]) / P[2]
    h_r = bump(u)
    h_rp = bump_d1(u) / P[2]
    s = _odd_profile(z, P[1], P[3])
    sp = _odd_profile_d1(z, P[1], P[3])
    if variant == VARIANT_WILSON:
        k = bump((z - P[1]) / P[3]) + bump((z + P[1]) / P[3])
        cr = -r * P[4] * h_r * sp
        ct = h_rp * k                     # -d(v_z)/dr with v_z = 1 - h_r k
        cz = 2.0 * P[4] * h_r * s + r * P[4] * h_rp * s
        return cr, ct, cz
    else:
        chi = _chi(r, P)
        chip = _chi_d1(r, P)
        # chi'' from the product rule (bump envelope times quadratic)
        du = r - P[0]
        b = bump(du / P[2])
        bp = bump_d1(du / P[2]) / P[2]
        bpp = _bump_d2(du / P[2]) / (P[2] * P[2])
        quad = P[5] + P[0] * du + P[6] * du * du
        quadp = P[0] + 2.0 * P[6] * du
        chipp = bpp * quad + 2.0 * bp * quadp + b * 2.0 * P[6]
        w = _w_even(z, P)
        wpp = _w_even_d2(z, P)
        cr = -r * P[4] * h_r * sp
        ct = chi * wpp / r + w * (chipp * r - chip) / (r * r)
        cz = 2.0 * P[4] * h_r * s + r * P[4] * h_rp * s
        return cr, ct, cz


@njit(cache=True)
def _bump_d2(u):
    if abs(u) >= 1.0:
        return 0.0
    w = 1.0 - u * u
    e = np.exp(1.0 - 1.0 / w)
    # d/du [ -2u/w^2 e ] = e ( -2/w^2 - 8u^2/w^3 + 4u^2/w^4 )
    return e * (-2.0 / (w * w) - 8.0 * u * u / (w ** 3) + 4.0 * u * u / (w ** 4))


@njit(cache=True)
def velocity_points(variant, P, pts):
    """Cartesian velocities at (m, 3) Cartesian points (plug frame)."""
    m = pts.shape[0]
    out = np.empty((m, 3))
    for i in range(m):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        r = np.hypot(x, y)
        rdot, f, zdot = velocity_cyl(variant, P, r, z)
        if r > 0.0:
            cx, cy = x / r, y / r
        else:
            cx, cy = 1.0, 0.0
        # v = rdot e_r + (f r) e_theta + zdot e_z
        out[i, 0] = rdot * cx - f * y
        out[i, 1] = rdot * cy + f * x
        out[i, 2] = zdot
    return out


@njit(cache=True)
def curl_points(variant, P, pts):
    m = pts.shape[0]
    out = np.empty((m, 3))
    for i in range(m):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        r = np.hypot(x, y)
        cr, ct, cz = curl_cyl(variant, P, r, z)
        if r > 0.0:
            cx, cy = x / r, y / r
        else:
            cx, cy = 1.0, 0.0
        out[i, 0] = cr * cx - ct * cy
        out[i, 1] = cr * cy + ct * cx
        out[i, 2] = cz
    return out


@njit(cache=True)
def div_cyl(variant, P, r, z):
    """Analytic divergence assembled term by term:
    (1/r) d(r v_r)/dr + d(v_z)/dz (the theta term vanishes by symmetry).
    For the stream variant the two terms cancel identically."""
    if variant == VARIANT_WILSON:
        k1 = bump_d1((z - P[1]) / P[3]) / P[3]
        k2 = bump_d1((z + P[1]) / P[3]) / P[3]
        return -bump((r - P[0]) / P[2]) * (k1 + k2)
    term_r = _chi_d1(r, P) * _w_even_d1(z, P) / r
    term_z = -_chi_d1(r, P) * _w_even_d1(z, P) / r
    return term_r + term_z


@njit(cache=True)
def div_points(variant, P, pts):
    m = pts.shape[0]
    out = np.empty(m)
    for i in range(m):
        r = np.hypot(pts[i, 0], pts[i, 1])
        out[i] = div_cyl(variant, P, r, pts[i, 2])
    return out


@njit(cache=True)
def _rk4_step(variant, P, r, th, z, dt):
    k1r, k1t, k1z = velocity_cyl(variant, P, r, z)
    k2r, k2t, k2z = velocity_cyl(variant, P, r + 0.5 * dt * k1r, z + 0.5 * dt * k1z)
    k3r, k3t, k3z = velocity_cyl(variant, P, r + 0.5 * dt * k2r, z + 0.5 * dt * k2z)
    k4r, k4t, k4z = velocity_cyl(variant, P, r + dt * k3r, z + dt * k3z)
    rn = r + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    tn = th + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
    zn = z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    return rn, tn, zn


@njit(cache=True)
def trace_plug(variant, P, r0, th0, z0, step, budget, z_exit, r_lo, r_hi,
               sample_times):
    """Trace one plug orbit.

    Returns (code, t_end, state_end(3,), arc_length, positions) where
    positions holds Cartesian samples at the requested times (unused
    entries are filled with the final state when the orbit ends early).
    """
    r, th, z = r0, th0, z0
    t = 0.0
    arc = 0.0
    nsamp = sample_times.shape[0]
    pos = np.empty((nsamp, 3))
    isamp = 0
    px, py, pz = r * np.cos(th), r * np.sin(th), z
    code = 1  # trapped unless an exit event fires
    while t < budget:
        dt = step
        # land exactly on pending sample times
        while isamp < nsamp and t + dt >= sample_times[isamp] - 1e-15:
            sub = sample_times[isamp] - t
            if sub > 0.0:
                r2, th2, z2 = _rk4_step(variant, P, r, th, z, sub)
            else:
                r2, th2, z2 = r, th, z
            pos[isamp, 0] = r2 * np.cos(th2)
            pos[isamp, 1] = r2 * np.sin(th2)
            pos[isamp, 2] = z2
            isamp += 1
        rn, tn, zn = _rk4_step(variant, P, r, th, z, dt)
        if zn >= z_exit:
            # bisection on the substep length for the crossing time
            lo, hi = 0.0, dt
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                rm, tm, zm = _rk4_step(variant, P, r, th, z, mid)
                if zm >= z_exit:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-15 * max(1.0, t):
                    break
            rn, tn, zn = _rk4_step(variant, P, r, th, z, hi)
            dt = hi
            code = 0
        qx, qy, qz = rn * np.cos(tn), rn * np.sin(tn), zn
        arc += np.sqrt((qx - px) ** 2 + (qy - py) ** 2 + (qz - pz) ** 2)
        px, py, pz = qx, qy, qz
        r, th, z = rn, tn, zn
        t += dt
        if code == 0:
            break
        if r < r_lo - 1e-9 or r > r_hi + 1e-9:
            code = 2
            break
    for j in range(isamp, nsamp):
        pos[j, 0] = r * np.cos(th)
        pos[j, 1] = r * np.sin(th)
        pos[j, 2] = z
    state = np.array([r, th, z])
    return code, t, state, arc, pos


_EMPTY = np.empty(0, dtype=np.float64)


def trace_plug_exit(variant, P, entry_cyl, step, budget, z_exit=1.0,
                    r_bounds=(0.0, np.inf)):
    """Exit-only trace (no path storage)."""
    r0, th0, z0 = entry_cyl
    return trace_plug(variant, P, r0, th0, z0, step, budget, z_exit,
                      r_bounds[0], r_bounds[1], _EMPTY)[:4]


# --- generic Cartesian tracer ------------------------------------------------


def trace_cartesian(vel_fn, x0, step, budget, z_exit=None, sample_times=None,
                    lateral_fn=None):
    """RK4 trace of a callable Cartesian field.

    vel_fn maps (m,3) -> (m,3).  Returns (code, t_end, end_point,
    arc_length, positions-at-sample_times).
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    samples = np.asarray(sample_times, dtype=np.float64) if sample_times is not None else np.empty(0)
    pos = np.empty((len(samples), 3))
    isamp = 0

    def f(p):
        return np.asarray(vel_fn(p[None, :]), dtype=np.float64)[0]

    def rk4(p, dt):
        k1 = f(p)
        k2 = f(p + 0.5 * dt * k1)
        k3 = f(p + 0.5 * dt * k2)
        k4 = f(p + dt * k3)
        return p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    t, arc = 0.0, 0.0
    code = 1
    while t < budget:
        dt = step
        while isamp < len(samples) and t + dt >= samples[isamp] - 1e-15:
            sub = samples[isamp] - t
            pos[isamp] = rk4(x, sub) if sub > 0 else x
            isamp += 1
        xn = rk4(x, dt)
        if z_exit is not None and xn[2] >= z_exit:
            lo, hi = 0.0, dt
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if rk4(x, mid)[2] >= z_exit:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-15 * max(1.0, t):
                    break
            xn = rk4(x, hi)
            dt = hi
            code = 0
        arc += float(np.linalg.norm(xn - x))
        x = xn
        t += dt
        if code == 0:
            break
        if lateral_fn is not None and lateral_fn(x):
            code = 2
            break
    pos[isamp:] = x
    return code, t, x.copy(), arc, pos
