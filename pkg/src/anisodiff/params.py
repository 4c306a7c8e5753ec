"""Problem parameters and every exponent derived from them.

The equation is d_t(|u|^{alpha-1} u) = sum_i d_i(|d_i u|^{p_i-2} d_i u) in N
space dimensions.  All exponents used by the solver diagnostics are computed
here and nowhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SUM_IDENTITY_RTOL = 1e-12


class ParameterError(ValueError):
    """Raised when a parameter tuple violates a structural inequality."""


@dataclass(frozen=True)
class Anisotropy:
    """Parameter tuple (N, alpha, p, Lambda).

    ``p`` is stored sorted ascending; ``axis_order[k]`` is the user axis that
    ended up in sorted slot ``k``.
    """

    dim: int
    alpha: float
    p: tuple[float, ...]
    lambda_struct: float = 1.0
    axis_order: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.dim!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if len(self.p) != self.dim:
            raise ParameterError(f"expected {self.dim} exponents p_i, got {len(self.p)}")
        bad = [q for q in self.p if not (q > 1.0 and math.isfinite(q))]
        if bad:
            raise ParameterError(f"every p_i must satisfy p_i > 1, violated by {bad}")
        if not self.lambda_struct >= 1.0:
            raise ParameterError(f"structure constant Lambda must be >= 1, got {self.lambda_struct!r}")
        if self.axis_order:
            # already-normalized record (e.g. dataclasses.replace)
            if list(self.p) != sorted(self.p) or sorted(self.axis_order) != list(range(self.dim)):
                raise ParameterError("axis_order given but p is not sorted")
        else:
            order = tuple(int(k) for k in np.argsort(self.p, kind="stable"))
            object.__setattr__(self, "axis_order", order)
            object.__setattr__(self, "p", tuple(float(self.p[k]) for k in order))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "dim", int(self.dim))

    @classmethod
    def from_user(cls, dim, alpha, p, lambda_struct=1.0) -> "Anisotropy":
        return cls(dim=dim, alpha=alpha, p=tuple(float(q) for q in p), lambda_struct=lambda_struct)

    @property
    def p_user(self) -> tuple[float, ...]:
        """Exponents in the order the user supplied them."""
        out = [0.0] * self.dim
        for slot, axis in enumerate(self.axis_order):
            out[axis] = self.p[slot]
        return tuple(out)

    def to_user_order(self, values):
        """Permute a per-axis sequence from sorted slots back to user axes."""
        out = [None] * self.dim
        for slot, axis in enumerate(self.axis_order):
            out[axis] = values[slot]
        return out


@dataclass(frozen=True)
class DerivedExponents:
    anis: Anisotropy
    p_bar: float
    p_bar_star: float | None
    P: float
    lambda_1: float
    lambda_alpha: float
    mass_decay_exponent: float
    mass_gain_exponent: float
    support_exponent: tuple[float, ...]
    support_mass_exponent: tuple[float, ...]
    selfsimilar_decay_exponent: float | None
    selfsimilar_support_exponent: tuple[float, ...] | None
    m_threshold: float
    lambda_small: float
    rough_d: float
    rough_chi: tuple[float, ...]
    supercritical: bool
    subcritical: bool
    boundedness_window: bool
    slow_diffusion: bool
    rough_support: bool
    ultracontractive: bool

    def p_bar_sigma(self, sigma: float) -> float:
        return self.p_bar * (1.0 + sigma / self.anis.dim)

    def lambda_q(self, q: float) -> float:
        N, a = self.anis.dim, self.anis.alpha
        return N * (self.p_bar - (a + 1.0)) + q * self.p_bar

    def local_bound_exponent(self) -> float:
        """Power on the mean integral in the supercritical explicit sup bound."""
        N = self.anis.dim
        return self.p_bar / (N * (self.p_bar_sigma(self.anis.alpha + 1.0) - self.P))

    def as_dict(self) -> dict:
        a = self.anis
        return {
            "dim": a.dim,
            "alpha": a.alpha,
            "p_sorted": list(a.p),
            "p_user": list(a.p_user),
            "axis_order": list(a.axis_order),
            "lambda_struct": a.lambda_struct,
            "p_bar": self.p_bar,
            "p_bar_star": self.p_bar_star,
            "P": self.P,
            "lambda_1": self.lambda_1,
            "lambda_alpha": self.lambda_alpha,
            "lambda_alpha_plus_1": self.lambda_q(a.alpha + 1.0),
            "mass_decay_exponent": self.mass_decay_exponent,
            "mass_gain_exponent": self.mass_gain_exponent,
            "support_exponent": list(self.support_exponent),
            "support_mass_exponent": list(self.support_mass_exponent),
            "selfsimilar_decay_exponent": self.selfsimilar_decay_exponent,
            "selfsimilar_support_exponent": (
                None if self.selfsimilar_support_exponent is None else list(self.selfsimilar_support_exponent)
            ),
            "m_threshold": self.m_threshold,
            "lambda_small": self.lambda_small,
            "rough_d": self.rough_d,
            "rough_chi": list(self.rough_chi),
            "rough_chi_min": min(self.rough_chi),
            "rough_chi_max": max(self.rough_chi),
            "supercritical": self.supercritical,
            "subcritical": self.subcritical,
            "boundedness_window": self.boundedness_window,
            "slow_diffusion": self.slow_diffusion,
            "rough_support": self.rough_support,
            "ultracontractive": self.ultracontractive,
        }


def harmonic_mean(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(len(p) / np.sum(1.0 / p))


def derive(a: Anisotropy) -> DerivedExponents:
    N, alpha = a.dim, a.alpha
    p = np.asarray(a.p, dtype=float)
    pb = harmonic_mean(p)
    pN = float(p[-1])

    lam1 = N * (pb - (alpha + 1.0)) + pb
    lam_a = N * (pb - (alpha + 1.0)) + alpha * pb
    P = max(alpha + 1.0, pN)

    with np.errstate(divide="ignore", invalid="ignore"):
        supp = tuple(float(x) for x in (N * (pb - p) + pb) / (lam1 * p))
        supp_mass = tuple(float(x) for x in pb * (p - alpha - 1.0) / (lam1 * p))

    if lam_a > 0:
        ss_decay = N / lam_a
        ss_supp = tuple(float(x) for x in (N * (pb - p) + alpha * pb) / (lam_a * p))
    else:
        ss_decay, ss_supp = None, None

    rough_den = N * (pb - alpha - 1.0) + pb * (alpha + 1.0)
    rough_d = (N * (pb - pN) + pb * (alpha + 1.0)) / rough_den
    rough_chi = tuple(float(x) for x in pb * (p - alpha - 1.0) / rough_den)

    upper_bdd = pb * (1.0 + (alpha + 1.0) / N)
    upper_slow = pb * (1.0 + alpha / N)
    supercritical = pb > N * (alpha + 1.0) / (N + alpha + 1.0)

    return DerivedExponents(
        anis=a,
        p_bar=pb,
        p_bar_star=(N * pb / (N - pb)) if pb < N else None,
        P=P,
        lambda_1=lam1,
        lambda_alpha=lam_a,
        mass_decay_exponent=N / lam1,
        mass_gain_exponent=pb / lam1,
        support_exponent=supp,
        support_mass_exponent=supp_mass,
        selfsimilar_decay_exponent=ss_decay,
        selfsimilar_support_exponent=ss_supp,
        m_threshold=(N / pb) * (alpha + 1.0 - pb),
        lambda_small=P - (N / pb) * (upper_bdd - P),
        rough_d=float(rough_d),
        rough_chi=rough_chi,
        supercritical=bool(supercritical),
        subcritical=not supercritical,
        boundedness_window=bool(np.all((p > 1.0) & (p < upper_bdd))),
        slow_diffusion=bool(alpha + 1.0 < p[0] and pN < upper_slow and upper_slow < N + alpha),
        rough_support=bool(np.all((alpha + 1.0 < p) & (p < upper_bdd)) and upper_bdd < N + alpha + 1.0),
        ultracontractive=bool(pb * (1.0 + 1.0 / N) > alpha + 1.0),
    )


def _close(x: float, y: float, rtol: float) -> bool:
    return abs(x - y) <= rtol * max(abs(x), abs(y), 1e-300)


def check_sum_identities(d: DerivedExponents, rtol: float = SUM_IDENTITY_RTOL) -> bool:
    """Per-axis support exponents must add up to the decay/mass exponents.

    sum_i s_i = N / lambda_1 and sum_i m_i = (lambda_1 - p_bar) / lambda_1,
    with the stored per-axis exponents on the left and ``d.lambda_1`` on the
    right, so an inconsistent record is rejected.
    """
    if not d.lambda_1 > 0:
        raise ParameterError("sum identities need lambda_1 > 0")
    N = d.anis.dim
    lam = d.lambda_1
    ok_time = _close(math.fsum(d.support_exponent), N / lam, rtol)
    ok_mass = _close(math.fsum(d.support_mass_exponent), (lam - d.p_bar) / lam, rtol)
    return ok_time and ok_mass


def perturbed(d: DerivedExponents, **changes) -> DerivedExponents:
    """Copy of ``d`` with some fields overwritten (for negative tests)."""
    from dataclasses import replace

    return replace(d, **changes)
