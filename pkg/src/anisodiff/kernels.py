"""Scalar kernels shared by the solver, the energy checker and the property suites.

Everything here is vectorized over numpy arrays and also accepts plain floats.
"""

from __future__ import annotations

import numpy as np


def signed_power(a, gamma):
    """|a|^(gamma-1) a, with the value 0 at a = 0 for every gamma > 0."""
    if np.any(np.asarray(gamma) <= 0):
        raise ValueError(f"signed_power needs gamma > 0, got {gamma!r}")
    a = np.asarray(a, dtype=float)
    out = np.sign(a) * np.abs(a) ** gamma
    return out if out.ndim else float(out)


def flux(s, p, eps=0.0):
    """Regularized prototype flux (s^2 + eps^2)^((p-2)/2) s.

    With ``eps == 0`` this is exactly ``signed_power(s, p - 1)``.
    """
    s = np.asarray(s, dtype=float)
    if eps == 0.0:
        out = np.sign(s) * np.abs(s) ** (p - 1.0)
    else:
        out = (s * s + eps * eps) ** (0.5 * (p - 2.0)) * s
    return out if out.ndim else float(out)


def b_alpha(v, w, alpha):
    """Boundary-term quantity b_alpha[v, w] (nonnegative, zero iff v == w)."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    c = alpha / (alpha + 1.0)
    av = np.abs(v)
    aw = np.abs(w)
    out = c * (av ** (alpha + 1.0) - aw ** (alpha + 1.0)) - w * (
        np.sign(v) * av**alpha - np.sign(w) * aw**alpha
    )
    return out if out.ndim else float(out)


def b_alpha_dual(v, w, alpha):
    """Second closed form of b_alpha, written in V = v^alpha, W = w^alpha.

    Used only as an independent cross-check of :func:`b_alpha`.
    """
    beta = 1.0 / alpha
    V = np.asarray(signed_power(v, alpha))
    W = np.asarray(signed_power(w, alpha))
    aV, aW = np.abs(V), np.abs(W)
    out = beta / (beta + 1.0) * (aW ** (beta + 1.0) - aV ** (beta + 1.0)) - V * (
        np.sign(W) * aW**beta - np.sign(V) * aV**beta
    )
    return out if out.ndim else float(out)


def u_from_v(v, alpha):
    """Invert v = |u|^(alpha-1) u."""
    if alpha == 1.0:
        v = np.asarray(v, dtype=float)
        return v.copy() if v.ndim else float(v)
    if alpha == 0.5:
        v = np.asarray(v, dtype=float)
        out = np.abs(v) * v
        return out if out.ndim else float(out)
    return signed_power(v, 1.0 / alpha)


def v_from_u(u, alpha):
    if alpha == 1.0:
        u = np.asarray(u, dtype=float)
        return u.copy() if u.ndim else float(u)
    return signed_power(u, alpha)
