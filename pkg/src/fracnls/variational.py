"""Energy, Pohozaev functional, mass-preserving dilation and fiber geometry.

The fiber map of a field is ``Phi(t) = E(t * u)`` with ``(t * u)(x) =
exp(N t / 2) u(exp(t) x)``.  It depends on the field only through four
integrals, so everything below ``fiber_coefficients`` is scalar arithmetic.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    FiberRangeError,
    GeometryDegenerateError,
    ParameterError,
    RegimeError,
    ResolutionError,
)
from .spectral import Field, _seminorm, _symbol

__all__ = [
    "Regime",
    "ProblemParams",
    "FiberCoefficients",
    "FiberGeometry",
    "Classification",
    "energy",
    "pohozaev",
    "dilate",
    "fiber_coefficients",
    "fiber_value",
    "fiber_deriv",
    "fiber_second_deriv",
    "fiber_geometry",
    "classify",
]


class Regime(str, enum.Enum):
    SUBCRITICAL_PAIR = "SubcriticalPair"
    SOBOLEV_CRITICAL = "SobolevCritical"


class Classification(str, enum.Enum):
    P_PLUS = "Pplus"
    P_ZERO = "Pzero"
    P_MINUS = "Pminus"
    NOT_ON_POHOZAEV = "NotOnPohozaev"


# Relative tolerance used to decide p == 2*_{s1}.
_CRITICAL_RTOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """Scalar problem data.

    Construction checks only the structural invariants (orders in (0,1),
    ``s2 < s1``, ``N > 2 s1``, positive ``mu`` and ``a``, ``p, q > 2``).  The
    exponent ordering that defines a regime is checked by :meth:`require_regime`
    so that pure arithmetic (energies, fiber values) still works on boundary
    parameter sets.
    """

    N: int
    s1: float
    s2: float
    p: float
    q: float
    mu: float
    a: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N}")
        if self.N == 1:
            warnings.warn("N = 1 lies outside the theory (N >= 2 required)", stacklevel=3)
        for name in ("s1", "s2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {v}")
        if not self.s2 < self.s1:
            raise ParameterError(f"s2 must be smaller than s1, got s2={self.s2}, s1={self.s1}")
        if not self.N > 2 * self.s1:
            raise ParameterError("N > 2 s1 is required")
        if not (self.p > 2 and self.q > 2):
            raise ParameterError("p and q must exceed 2")
        if not self.mu > 0:
            raise ParameterError(f"mu must be positive, got {self.mu}")
        if not self.a > 0:
            raise ParameterError(f"a must be positive, got {self.a}")

    @property
    def kappa_p(self) -> float:
        return self.N * (self.p - 2) / (2 * self.p)

    @property
    def kappa_q(self) -> float:
        return self.N * (self.q - 2) / (2 * self.q)

    @property
    def two_star_s1(self) -> float:
        return 2 * self.N / (self.N - 2 * self.s1)

    @property
    def two_star_s2(self) -> float:
        return 2 * self.N / (self.N - 2 * self.s2)

    @property
    def p_bar(self) -> float:
        """L2-critical exponent ``2 + 4 s1 / N``."""
        return 2 + 4 * self.s1 / self.N

    @property
    def p_tilde(self) -> float:
        return 2 + 4 * self.s2 / self.N

    def regime_violations(self) -> tuple[Regime | None, list[str]]:
        """Inferred regime (or None) and the strict inequalities that fail."""
        problems = []
        if not self.q < self.p_tilde:
            problems.append(f"q < 2 + 4 s2/N fails: q={self.q}, 2 + 4 s2/N={self.p_tilde}")
        if abs(self.p - self.two_star_s1) <= _CRITICAL_RTOL * self.two_star_s1:
            return (None if problems else Regime.SOBOLEV_CRITICAL), problems
        if not self.p_bar < self.p:
            problems.append(f"2 + 4 s1/N < p fails: p={self.p}, 2 + 4 s1/N={self.p_bar}")
        if not self.p < self.two_star_s1:
            problems.append(f"p < 2*_s1 fails: p={self.p}, 2*_s1={self.two_star_s1}")
        return (None if problems else Regime.SUBCRITICAL_PAIR), problems

    @property
    def regime(self) -> Regime | None:
        return self.regime_violations()[0]

    def require_regime(self, *allowed: Regime) -> Regime:
        regime, problems = self.regime_violations()
        if regime is None:
            raise RegimeError("parameters fit no supported regime: " + "; ".join(problems))
        if allowed and regime not in allowed:
            raise RegimeError(f"operation needs regime in {[r.value for r in allowed]}, got {regime.value}")
        return regime

    def replace(self, **changes) -> "ProblemParams":
        d = asdict(self)
        d.update(changes)
        return ProblemParams(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kappa_p"] = self.kappa_p
        d["kappa_q"] = self.kappa_q
        d["two_star_s1"] = self.two_star_s1
        d["two_star_s2"] = self.two_star_s2
        regime = self.regime
        d["regime"] = regime.value if regime else None
        return d


@dataclass(frozen=True)
class FiberCoefficients:
    A: float
    B: float
    C: float
    D: float

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"fiber coefficient {name} must be finite and >= 0, got {v}")

    def scale(self, prm: ProblemParams) -> float:
        """Reference magnitude ``s1 A + s2 B`` for Pohozaev tolerances."""
        return prm.s1 * self.A + prm.s2 * self.B

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FiberGeometry:
    xi: float
    t_max_pt: float
    c_zero: float
    d_zero: float
    phi_at_xi: float
    phi_at_tmax: float
    classification_at_zero: Classification
    pohozaev_band: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classification_at_zero"] = self.classification_at_zero.value
        return d


def _exponents(prm: ProblemParams) -> tuple[float, float, float, float]:
    return 2 * prm.s1, 2 * prm.s2, prm.p * prm.kappa_p, prm.q * prm.kappa_q


def _weights(cf: FiberCoefficients, prm: ProblemParams) -> tuple[float, float, float, float]:
    """Signed weights of ``Phi(t) = sum w_i exp(k_i t)``."""
    return cf.A / 2, cf.B / 2, -cf.C / prm.p, -prm.mu * cf.D / prm.q


def _terms(cf: FiberCoefficients, t: float, prm: ProblemParams, order: int) -> list[float]:
    out = []
    for name, w, k in zip("ABCD", _weights(cf, prm), _exponents(prm)):
        if w == 0.0:
            out.append(0.0)
            continue
        try:
            e = math.exp(k * t)
        except OverflowError:
            raise FiberRangeError(name, t) from None
        v = w * k**order * e
        if not math.isfinite(v):
            raise FiberRangeError(name, t)
        out.append(v)
    return out


def fiber_value(cf: FiberCoefficients, t: float, prm: ProblemParams) -> float:
    return math.fsum(_terms(cf, t, prm, 0))


def fiber_deriv(cf: FiberCoefficients, t: float, prm: ProblemParams) -> float:
    return math.fsum(_terms(cf, t, prm, 1))


def fiber_second_deriv(cf: FiberCoefficients, t: float, prm: ProblemParams) -> float:
    return math.fsum(_terms(cf, t, prm, 2))


def fiber_value_array(cf: FiberCoefficients, t: np.ndarray, prm: ProblemParams, order: int = 0) -> np.ndarray:
    """Vectorized ``Phi^{(order)}`` for dense scans."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for w, k in zip(_weights(cf, prm), _exponents(prm)):
        if w != 0.0:
            out += w * k**order * np.exp(k * t)
    return out


def fiber_coefficients(u: Field, prm: ProblemParams) -> FiberCoefficients:
    vals = u.values
    cell = u.grid.cell_volume
    absu = np.abs(vals)
    return FiberCoefficients(
        A=_seminorm(vals, _symbol(u.grid, prm.s1), cell),
        B=_seminorm(vals, _symbol(u.grid, prm.s2), cell),
        C=float(np.sum(absu**prm.p)) * cell,
        D=float(np.sum(absu**prm.q)) * cell,
    )


def energy(u: Field, prm: ProblemParams) -> float:
    """``E(u) = A/2 + B/2 - C/p - mu D/q``."""
    return fiber_value(fiber_coefficients(u, prm), 0.0, prm)


def pohozaev(u: Field, prm: ProblemParams) -> float:
    """``P(u) = s1 A + s2 B - kappa_p C - mu kappa_q D``, i.e. ``Phi'(0)``."""
    return fiber_deriv(fiber_coefficients(u, prm), 0.0, prm)


def _interp_matrix(grid, factor: float) -> np.ndarray:
    # Row j evaluates the trigonometric interpolant at factor * x_j; targets
    # outside [-L, L) get a zero row (the field is extended by zero).
    x = grid.axis()
    k = grid.wavenumbers()
    L = grid.box_half_length
    y = factor * x
    mat = np.exp(1j * np.outer(y + L, k)) / grid.points_per_axis
    mat[(y < -L) | (y >= L)] = 0.0
    return mat


def _dilate_values(values: np.ndarray, grid, t: float) -> np.ndarray:
    if t == 0.0:
        return np.array(values, copy=True)
    mat = _interp_matrix(grid, math.exp(t))
    spec = np.fft.fftn(values)
    for ax in range(grid.dim):
        spec = np.moveaxis(np.tensordot(mat, spec, axes=([1], [ax])), 0, ax)
    # The real part is the symmetric (cosine) treatment of the Nyquist mode.
    return math.exp(grid.dim * t / 2) * spec.real


def dilate(u: Field, t: float, t_cap: float = 3.0) -> Field:
    """Mass-preserving dilation ``exp(N t/2) u(exp(t) x)``.

    Evaluated by trigonometric interpolation of ``u`` at ``exp(t) x``.  For
    ``t > 0`` some of those points leave ``[-L, L)``; the field is taken to
    vanish there, so a localized field keeps its mass instead of picking up
    periodic images.
    """
    if not math.isfinite(t):
        raise ParameterError("dilation parameter must be finite")
    if abs(t) > t_cap:
        raise ResolutionError(f"|t| = {abs(t)} exceeds t_cap = {t_cap}")
    return Field(u.grid, _dilate_values(u.values, u.grid, t))


def classify(cf: FiberCoefficients, prm: ProblemParams, rel_tol: float = 1e-8) -> Classification:
    band = rel_tol * cf.scale(prm)
    if abs(fiber_deriv(cf, 0.0, prm)) > band:
        return Classification.NOT_ON_POHOZAEV
    second = fiber_second_deriv(cf, 0.0, prm)
    if second > band:
        return Classification.P_PLUS
    if second < -band:
        return Classification.P_MINUS
    return Classification.P_ZERO


_BRACKETS = (20.0, 30.0, 45.0, 60.0)


def _bisect_sign(f, lo: float, hi: float, iters: int = 200) -> float:
    """Locate a sign change of ``f`` in ``[lo, hi]`` with ``f(lo) > 0 > f(hi)`` or the reverse."""
    flo = f(lo) > 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if (f(mid) > 0) == flo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _safeguarded_newton(f, df, lo: float, hi: float, scale, tol: float = 1e-12) -> float:
    """Root of ``f`` in a sign-change bracket: Newton steps, bisection fallback."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise GeometryDegenerateError("bracket does not change sign", (lo, hi))
    if flo > 0:
        lo, hi = hi, lo  # keep f(lo) < 0
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = f(x)
        if abs(fx) <= tol * scale(x):
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        d = df(x)
        step_ok = d != 0.0
        if step_ok:
            xn = x - fx / d
            step_ok = min(lo, hi) < xn < max(lo, hi)
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if xn == x:
            return x
        x = xn
    return x


def _peak_and_roots(cf, prm, order: int, name: str) -> tuple[float, float]:
    """Two roots of ``Phi^{(order)}`` (order 0 or 1).

    Divided by ``exp(q kappa_q t)`` the function is unimodal: it tends to a
    negative constant at -inf and to -inf at +inf.  Its peak is found by
    bisection on the derivative of the rescaled function, then one root is
    bracketed on each side.
    """
    k_q = prm.q * prm.kappa_q
    w = _weights(cf, prm)
    k = _exponents(prm)

    def g(t):
        # Phi^{(order)} * exp(-k_q t), the D term being constant.
        return math.fsum(w[i] * k[i] ** order * math.exp((k[i] - k_q) * t) for i in range(4))

    def dg(t):
        return math.fsum(
            w[i] * k[i] ** order * (k[i] - k_q) * math.exp((k[i] - k_q) * t) for i in range(3)
        )

    for half in _BRACKETS:
        lo, hi = -half, half
        try:
            if not (dg(lo) > 0 and dg(hi) < 0):
                continue
            peak = _bisect_sign(dg, lo, hi)
            if not g(peak) > 0:
                raise GeometryDegenerateError(
                    f"{name}: rescaled function peaks at non-positive level "
                    f"{g(peak):.3e} at t={peak:.6g}; fewer than two roots",
                    (lo, hi),
                )
            if not (g(lo) < 0 and g(hi) < 0):
                continue
        except OverflowError:
            raise FiberRangeError("C", hi) from None
        f = (lambda t: fiber_deriv(cf, t, prm)) if order == 1 else (lambda t: fiber_value(cf, t, prm))
        df = (lambda t: fiber_second_deriv(cf, t, prm)) if order == 1 else (lambda t: fiber_deriv(cf, t, prm))

        def scale(t, order=order):
            return math.fsum(abs(v) for v in _terms(cf, t, prm, order)) + 1e-300

        left = _safeguarded_newton(f, df, lo, peak, scale)
        right = _safeguarded_newton(f, df, peak, hi, scale)
        return left, right
    raise GeometryDegenerateError(
        f"{name}: no sign-change bracket within [-{_BRACKETS[-1]}, {_BRACKETS[-1]}]",
        (-_BRACKETS[-1], _BRACKETS[-1]),
    )


def fiber_geometry(cf: FiberCoefficients, prm: ProblemParams, rel_tol: float = 1e-8) -> FiberGeometry:
    """Critical points ``xi < t`` and zeros ``c < d`` of the fiber map.

    Requires ``C > 0`` and ``D > 0``; parameters outside the validity of the
    two-critical-point picture raise :class:`GeometryDegenerateError`.
    """
    if not (cf.C > 0 and cf.D > 0):
        raise GeometryDegenerateError("fiber geometry needs C > 0 and D > 0")
    if not (prm.q * prm.kappa_q < 2 * prm.s2 and 2 * prm.s1 < prm.p * prm.kappa_p):
        raise RegimeError("fiber geometry needs q kappa_q < 2 s2 and 2 s1 < p kappa_p")
    xi, tmax = _peak_and_roots(cf, prm, 1, "critical-point bracket")
    c, d = _peak_and_roots(cf, prm, 0, "zero bracket")
    geo = FiberGeometry(
        xi=xi,
        t_max_pt=tmax,
        c_zero=c,
        d_zero=d,
        phi_at_xi=fiber_value(cf, xi, prm),
        phi_at_tmax=fiber_value(cf, tmax, prm),
        classification_at_zero=classify(cf, prm, rel_tol),
        pohozaev_band=rel_tol * cf.scale(prm),
    )
    if not (geo.xi < geo.c_zero < geo.t_max_pt < geo.d_zero):
        raise GeometryDegenerateError(
            f"ordering xi < c < t < d violated: {geo.xi}, {geo.c_zero}, {geo.t_max_pt}, {geo.d_zero}"
        )
    return geo
