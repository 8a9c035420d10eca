"""Explicit thresholds: the auxiliary function h, conditions (A0)-(A2) and
the critical-exponent surface h(a, rho) with its mass thresholds.

Every function here is closed-form scalar arithmetic on ``ProblemParams`` and
a :class:`ConstantsTable`; root searches are plain bisection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

from .errors import GeometryDegenerateError, ParameterError, PreconditionError, RegimeError
from .spectral import GridDescriptor
from .variational import ProblemParams, Regime

__all__ = [
    "Provenance",
    "ConstantsTable",
    "ConditionResult",
    "HGeometry",
    "CriticalThresholds",
    "h_subcritical",
    "h_subcritical_deriv",
    "phi_aux",
    "phi_aux_max",
    "a1_threshold_mu",
    "h_geometry",
    "check_A0",
    "check_A1",
    "check_A2",
    "h_critical",
    "critical_thresholds",
    "critical_exponent_identity",
]


class Provenance(str, enum.Enum):
    USER_SUPPLIED = "UserSupplied"
    ESTIMATED = "Estimated"


@dataclass(frozen=True)
class ConstantsTable:
    """Gagliardo-Nirenberg constants for exponents ``q`` and ``p`` and the
    Sobolev constant, all for the higher order ``s1``."""

    gn_q: float
    gn_p: float
    sobolev_S: float
    provenance: Provenance = Provenance.USER_SUPPLIED
    grid_used: GridDescriptor | None = None

    def __post_init__(self):
        for name in ("gn_q", "gn_p", "sobolev_S"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"constant {name} must be positive and finite, got {v}")
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    @classmethod
    def for_critical(cls, gn_q: float, sobolev_S: float, prm: ProblemParams, **kw) -> "ConstantsTable":
        """Table whose ``gn_p`` is tied to the Sobolev constant by ``S^(-2/2*)``."""
        return cls(gn_q, sobolev_S ** (-2.0 / prm.two_star_s1), sobolev_S, **kw)

    def check(self, prm: ProblemParams, rtol: float = 1e-10) -> None:
        """Enforce the critical-regime link between ``gn_p`` and ``sobolev_S``."""
        if prm.regime is Regime.SOBOLEV_CRITICAL:
            want = self.sobolev_S ** (-2.0 / prm.two_star_s1)
            if abs(self.gn_p - want) > rtol * want:
                raise ParameterError(
                    f"critical regime needs gn_p = S^(-2/2*) = {want!r}, got {self.gn_p!r}"
                )

    @property
    def source_tag(self) -> str:
        return "estimated" if self.provenance is Provenance.ESTIMATED else "user-supplied"

    def to_dict(self) -> dict:
        return {
            "gn_q": self.gn_q,
            "gn_p": self.gn_p,
            "sobolev_S": self.sobolev_S,
            "provenance": self.provenance.value,
            "grid_used": self.grid_used.to_dict() if self.grid_used else None,
        }


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    lhs: float | None
    rhs: float | None
    vacuous: bool = False

    @property
    def margin(self) -> float | None:
        """``rhs / lhs``; above 1 means the strict inequality holds."""
        if self.lhs is None or self.rhs is None or self.lhs == 0:
            return None
        return self.rhs / self.lhs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["margin"] = self.margin
        return d


@dataclass(frozen=True)
class HGeometry:
    R0: float
    R1: float
    t_max: float
    h_at_tmax: float
    t_min: float
    h_at_tmin: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CriticalThresholds:
    a0: float
    abar0: float
    K0: float
    K_mu: float
    rho_a: float
    rho_0: float
    A_mu: float

    @property
    def a_limit(self) -> float:
        return min(self.a0, self.abar0)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Subcritical pair: h(t) and its roots


def _h_terms(prm: ProblemParams, ct: ConstantsTable):
    N, s1, p, q, a = prm.N, prm.s1, prm.p, prm.q, prm.a
    ep = N * (p - 2) / (2 * s1)
    eq = N * (q - 2) / (2 * s1)
    cp = ct.gn_p / p * a ** (p - ep)
    cq = prm.mu * ct.gn_q / q * a ** (q - eq)
    return cp, ep, cq, eq


def h_subcritical(t: float, prm: ProblemParams, ct: ConstantsTable) -> float:
    """``t^2/2 - c_p t^(N(p-2)/2s1) - c_q t^(N(q-2)/2s1)``: lower bound of E on S_a."""
    if not t > 0:
        raise ParameterError(f"h is defined for t > 0, got {t}")
    cp, ep, cq, eq = _h_terms(prm, ct)
    return 0.5 * t * t - cp * t**ep - cq * t**eq


def h_subcritical_deriv(t: float, prm: ProblemParams, ct: ConstantsTable) -> float:
    if not t > 0:
        raise ParameterError(f"h is defined for t > 0, got {t}")
    cp, ep, cq, eq = _h_terms(prm, ct)
    return t - cp * ep * t ** (ep - 1) - cq * eq * t ** (eq - 1)


def _denominators(prm: ProblemParams) -> tuple[float, float]:
    dq = 4 * prm.s1 - prm.N * (prm.q - 2)
    dp = prm.N * (prm.p - 2) - 4 * prm.s1
    if dq == 0 or dp == 0:
        raise RegimeError("exponent denominator vanishes: 4 s1 = N(q-2) or N(p-2) = 4 s1")
    return dq, dp


def phi_aux(t: float, prm: ProblemParams, ct: ConstantsTable) -> float:
    """``h(t) / t^(N(q-2)/2s1)`` without the constant q-term, so that
    ``h(t) > 0`` iff ``phi_aux(t) > mu C_q a^(q - N(q-2)/2s1) / q``."""
    N, s1, p, q, a = prm.N, prm.s1, prm.p, prm.q, prm.a
    return 0.5 * t ** ((4 * s1 - N * (q - 2)) / (2 * s1)) - ct.gn_p / p * a ** (
        p - N * (p - 2) / (2 * s1)
    ) * t ** (N * (p - q) / (2 * s1))


def phi_aux_max(prm: ProblemParams, ct: ConstantsTable) -> tuple[float, float]:
    """Unique maximizer ``t_bar`` of :func:`phi_aux` and the closed-form maximum."""
    N, s1, p, q, a = prm.N, prm.s1, prm.p, prm.q, prm.a
    dq, dp = _denominators(prm)
    base = p * dq / (2 * N * ct.gn_p * (p - q))
    t_bar = (base / a ** ((2 * p * s1 - N * (p - 2)) / (2 * s1))) ** (2 * s1 / dp)
    value = (
        a ** ((2 * p * s1 - N * (p - 2)) / (2 * s1) * (-dq) / dp)
        * base ** (dq / dp)
        * (dp / (2 * N * (p - q)))
    )
    return t_bar, value


def _bisect(f, lo: float, hi: float) -> float:
    """Sign change of ``f`` in ``[lo, hi]`` to the last representable bit."""
    flo = f(lo) > 0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        if (f(mid) > 0) == flo:
            lo = mid
        else:
            hi = mid


def h_geometry(prm: ProblemParams, ct: ConstantsTable) -> HGeometry:
    """Zeros ``R0 < R1`` and extrema of h; requires (A1)."""
    prm.require_regime(Regime.SUBCRITICAL_PAIR)
    a1 = check_A1(prm, ct)
    if not a1.passed:
        raise PreconditionError("condition (A1) fails", a1.lhs, a1.rhs)
    t_bar, _ = phi_aux_max(prm, ct)
    h = lambda t: h_subcritical(t, prm, ct)
    dh = lambda t: h_subcritical_deriv(t, prm, ct)
    if not h(t_bar) > 0:
        raise GeometryDegenerateError("h is not positive at the auxiliary maximizer", (0.0, t_bar))
    lo = t_bar
    while h(lo) > 0:
        lo *= 0.5
        if lo < 1e-300:
            raise GeometryDegenerateError("no left zero of h", (0.0, t_bar))
    hi = t_bar
    while h(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise GeometryDegenerateError("no right zero of h", (t_bar, math.inf))
    R0 = _bisect(h, lo, t_bar)
    R1 = _bisect(h, t_bar, hi)
    t_max = _bisect(dh, R0, R1)
    # The local minimum lies where h' changes sign from - to + left of R0.
    t_min = _bisect(dh, R0 * 1e-12, R0) if dh(R0 * 1e-12) < 0 else float("nan")
    return HGeometry(
        R0=R0,
        R1=R1,
        t_max=t_max,
        h_at_tmax=h(t_max),
        t_min=t_min,
        h_at_tmin=h(t_min) if math.isfinite(t_min) else float("nan"),
    )


def _verdict(name: str, lhs: float, rhs: float) -> ConditionResult:
    # Equality counts as failure: the inequalities are strict.
    return ConditionResult(name, bool(lhs < rhs), lhs, rhs)


def check_A0(prm: ProblemParams, ct: ConstantsTable) -> ConditionResult:
    """Mass smallness needed for ``lambda < 0`` when ``p > 2N/(N - 2 s2)``."""
    N, s1, s2, p, a = prm.N, prm.s1, prm.s2, prm.p, prm.a
    _, dp = _denominators(prm)
    kp = prm.kappa_p
    lhs = a ** (2 * (p - 2) * s1 / dp)
    vacuous = not p > 2 * N / (N - 2 * s2)
    try:
        rhs = ((s1 - s2) / ct.gn_p) ** (2 * s1 / dp) * ((s1 - kp) / (kp - s2)) ** (
            s1 / (2 * (s1 - s2))
        )
        if isinstance(rhs, complex) or not math.isfinite(rhs):
            rhs = None
    except (ZeroDivisionError, ValueError):
        rhs = None
    if vacuous:
        return ConditionResult("A0", True, lhs, rhs, vacuous=True)
    if rhs is None:
        return ConditionResult("A0", False, lhs, None)
    return _verdict("A0", lhs, rhs)


def _a1_sides(prm: ProblemParams, ct: ConstantsTable) -> tuple[float, float, float]:
    """``(a-power, rhs)`` with lhs = mu * a-power."""
    N, s1, p, q, a = prm.N, prm.s1, prm.p, prm.q, prm.a
    dq, dp = _denominators(prm)
    expo = q - N * (q - 2) / (2 * s1) + (p - N * (p - 2) / (2 * s1)) * dq / dp
    rhs = (
        (p * dq / (2 * N * ct.gn_p * (p - q))) ** (dq / dp)
        * (dp / (2 * N * (p - q)))
        * q
        / ct.gn_q
    )
    return a**expo, rhs, expo


def check_A1(prm: ProblemParams, ct: ConstantsTable) -> ConditionResult:
    apow, rhs, _ = _a1_sides(prm, ct)
    return _verdict("A1", prm.mu * apow, rhs)


def a1_threshold_mu(prm: ProblemParams, ct: ConstantsTable) -> float:
    """Value of ``mu`` at which (A1) holds with equality for the mass ``prm.a``."""
    apow, rhs, _ = _a1_sides(prm, ct)
    return rhs / apow


def check_A2(prm: ProblemParams, ct: ConstantsTable) -> ConditionResult:
    N, s1, p, q, a, mu = prm.N, prm.s1, prm.p, prm.q, prm.a, prm.mu
    dq, dp = _denominators(prm)
    kp, kq = prm.kappa_p, prm.kappa_q
    lhs = a ** ((2 * q * s1 - N * (q - 2)) / dq + (2 * p * s1 - N * (p - 2)) / dp) * mu ** (
        2 * s1 / dq
    )
    rhs = (s1 * (p * kp - 2 * s1) / (ct.gn_q * kq * (p * kp - q * kq))) ** (2 * s1 / dq) * (
        s1 * (2 * s1 - q * kq) / (ct.gn_p * kp * (p * kp - q * kq))
    ) ** (2 * s1 / dp)
    return _verdict("A2", lhs, rhs)


# ---------------------------------------------------------------------------
# Critical exponent p = 2*_{s1}


def _critical_exponents(prm: ProblemParams):
    N, s1, q = prm.N, prm.s1, prm.q
    den = N * (2 * q * s1 - N * (q - 2))
    e_rho = (N - 2 * s1) * 2 * s1 / den
    e1 = 8 * s1**2 / den
    e2 = (N - 2 * s1) * (N * (q - 2) - 4 * s1) / den
    return e_rho, e1, e2


def critical_exponent_identity(N: int, s1: float, q: float) -> tuple[float, float]:
    """Both sides of ``(N-2s1)(N(q-2)-4s1)/(N(2qs1-N(q-2))) + 1 = 8 s1^2/(N(2qs1-N(q-2)))``."""
    den = N * (2 * q * s1 - N * (q - 2))
    return (N - 2 * s1) * (N * (q - 2) - 4 * s1) / den + 1, 8 * s1**2 / den


def h_critical(a: float, rho: float, prm: ProblemParams, ct: ConstantsTable) -> float:
    """``E(u) >= rho^2 h(a, rho)`` with ``rho`` the s1-seminorm (not squared)."""
    prm.require_regime(Regime.SOBOLEV_CRITICAL)
    if not (a > 0 and rho > 0):
        raise ParameterError("h(a, rho) needs a > 0 and rho > 0")
    N, s1, q = prm.N, prm.s1, prm.q
    ts = prm.two_star_s1
    S = ct.sobolev_S
    return (
        0.5
        - rho ** (4 * s1 / (N - 2 * s1)) / (ts * S ** (ts / 2))
        - prm.mu * ct.gn_q / q * a ** ((2 * N - q * (N - 2 * s1)) / (2 * s1))
        * rho ** ((N * (q - 2) - 4 * s1) / (2 * s1))
    )


def _a_mu(mu: float, prm: ProblemParams, ct: ConstantsTable) -> float:
    N, s1, q = prm.N, prm.s1, prm.q
    S2 = ct.sobolev_S ** (prm.two_star_s1 / 2)
    return mu * ct.gn_q * (4 * s1 - N * (q - 2)) / (2 * s1 * q) * N * S2 / (2 * s1)


def _k_of(mu: float, prm: ProblemParams, ct: ConstantsTable) -> float:
    _, e1, e2 = _critical_exponents(prm)
    ts = prm.two_star_s1
    Am = _a_mu(mu, prm, ct)
    return Am**e1 / (ts * ct.sobolev_S ** (ts / 2)) + mu * ct.gn_q / prm.q * Am**e2


def critical_thresholds(prm: ProblemParams, ct: ConstantsTable) -> CriticalThresholds:
    prm.require_regime(Regime.SOBOLEV_CRITICAL)
    N, s1, q, mu = prm.N, prm.s1, prm.q, prm.mu
    e_rho, _, _ = _critical_exponents(prm)
    ts = prm.two_star_s1
    kq = prm.kappa_q
    A_mu = _a_mu(mu, prm, ct)
    K0 = _k_of(1.0, prm, ct)
    K_mu = _k_of(mu, prm, ct)
    mexp = -2 * s1 / (2 * q * s1 - N * (q - 2))
    a0 = mu**mexp * (1 / (2 * K0)) ** (N / (4 * s1))
    abar0 = (
        mu**mexp
        * (s1**2 * (ts - 2) / (ct.gn_q * kq * (s1 * ts - q * kq))) ** (2 * s1 / (2 * q * s1 - N * (q - 2)))
        * (ct.sobolev_S ** (2 / ts) * (2 * s1 - q * kq) / (ts * s1 - q * kq))
        ** ((N - 2 * s1) / (4 * s1) * (4 * s1 - N * (q - 2)) / (2 * q * s1 - N * (q - 2)))
    )
    rho = lambda a: A_mu**e_rho * a ** ((N - 2 * s1) / N)
    return CriticalThresholds(
        a0=a0, abar0=abar0, K0=K0, K_mu=K_mu, rho_a=rho(prm.a), rho_0=rho(a0), A_mu=A_mu
    )
