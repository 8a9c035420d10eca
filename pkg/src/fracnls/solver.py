"""Normalized solutions on the mass sphere.

Both solvers run a Sobolev-preconditioned Riemannian gradient method on
``S_a = {mass(u) = a^2}``: the L2 gradient is mapped through
``(1 + (-Delta)^{s1} + (-Delta)^{s2})^{-1}``, projected onto the tangent space
with respect to the L2 pairing, and the step is retracted by rescaling.

* :func:`local_minimize` descends E inside the ball ``|(-Delta)^{s1/2} u|_2 < R0``
  (or ``rho_0`` at the critical exponent).
* :func:`mountain_pass` descends E on ``{P = 0, Phi''(0) < 0}``, the branch of
  fiber maximizers, where E agrees with the reduced functional
  ``u -> E(t_u * u)``.  Each step is pulled back onto ``P = 0`` along the
  preconditioned normal of P.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from dataclasses import field as dc_field

import numpy as np

from .errors import (
    GeometryDegenerateError,
    PreconditionError,
    ProjectionError,
    ResolutionError,
)
from .spectral import Field, GridDescriptor, _rearrange, _symbol
from .thresholds import (
    ConstantsTable,
    check_A1,
    check_A2,
    critical_thresholds,
    h_geometry,
)
from .variational import (
    Classification,
    FiberCoefficients,
    ProblemParams,
    Regime,
    _dilate_values,
    classify,
    fiber_geometry,
    fiber_second_deriv,
    fiber_value,
)

__all__ = [
    "SolverConfig",
    "SolutionRecord",
    "SolutionKind",
    "LevelName",
    "project_to_sphere",
    "constrained_gradient",
    "lagrange_multiplier",
    "pde_residual",
    "local_minimize",
    "mountain_pass",
    "gaussian_seed",
]


class SolutionKind(str, enum.Enum):
    LOCAL_MIN = "LocalMin"
    MOUNTAIN_PASS = "MountainPass"


class LevelName(str, enum.Enum):
    GAMMA = "gamma"
    SIGMA = "sigma"
    GAMMABAR = "gammabar"


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 50_000
    step: float = 1e-2
    grad_tol: float = 1e-7
    pohozaev_tol: float = 1e-6
    symmetrize_every: int = 50
    t_cap: float = 3.0
    seed: int = 0
    stagnation_window: int = 200

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        for name in ("step", "grad_tol", "pohozaev_tol", "t_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.symmetrize_every < 0:
            raise ValueError("symmetrize_every must be >= 0")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(eq=False)
class SolutionRecord:
    field: Field = dc_field(repr=False)
    lambda_: float
    energy_level: float
    pohozaev_residual: float
    seminorm_s1: float
    classification: SolutionKind
    level_name: LevelName
    iterations: int
    converged: bool
    pde_residual: float = float("nan")
    grad_norm: float = float("nan")
    fiber_class: Classification | None = None
    verified: bool = True
    seed: int = 0
    trace: list = dc_field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_,
            "energy_level": self.energy_level,
            "pohozaev_residual": self.pohozaev_residual,
            "seminorm_s1": self.seminorm_s1,
            "classification": self.classification.value,
            "level_name": self.level_name.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "pde_residual": self.pde_residual,
            "grad_norm": self.grad_norm,
            "fiber_class": self.fiber_class.value if self.fiber_class else None,
            "verified": self.verified,
            "seed": self.seed,
        }


TRACE_COLUMNS = ("iter", "energy", "pohozaev", "grad_norm", "seminorm_s1")


# ---------------------------------------------------------------------------
# Public building blocks


def _mass(values: np.ndarray, cell: float) -> float:
    return float(np.sum(values * values)) * cell


def project_to_sphere(u: Field, a: float) -> Field:
    """Rescale ``u`` to mass ``a^2``."""
    m = _mass(u.values, u.grid.cell_volume)
    if not m > 0:
        raise ProjectionError("cannot project a zero field onto the mass sphere")
    return Field(u.grid, u.values * (a / math.sqrt(m)))


class _Ops:
    """Cached symbols and array-level evaluation for one (grid, params) pair."""

    def __init__(self, grid: GridDescriptor, prm: ProblemParams):
        self.grid = grid
        self.prm = prm
        self.cell = grid.cell_volume
        self.n = grid.points_per_axis**grid.dim
        self.sym1 = _symbol(grid, prm.s1)
        self.sym2 = _symbol(grid, prm.s2)
        self.sym12 = self.sym1 + self.sym2
        self.precond = 1.0 / (1.0 + self.sym12)

    def state(self, u: np.ndarray, t: float = 0.0) -> dict:
        """Coefficients and gradient of ``v -> Phi_v(t)`` at ``u``.

        ``t = 0`` gives the energy itself; other values give the energy of
        ``t * u`` as a function of ``u`` (each term carries its fiber weight).
        """
        prm = self.prm
        spec = np.fft.fftn(u)
        power = spec.real**2 + spec.imag**2
        absu = np.abs(u)
        up = absu ** (prm.p - 2)
        uq = absu ** (prm.q - 2)
        cf = FiberCoefficients(
            A=float(np.sum(self.sym1 * power)) * self.cell / self.n,
            B=float(np.sum(self.sym2 * power)) * self.cell / self.n,
            C=float(np.sum(up * absu * absu)) * self.cell,
            D=float(np.sum(uq * absu * absu)) * self.cell,
        )
        if t == 0.0:
            w1 = w2 = wp = wq = 1.0
            lin_sym = self.sym12
        else:
            w1, w2 = math.exp(2 * prm.s1 * t), math.exp(2 * prm.s2 * t)
            wp, wq = math.exp(prm.p * prm.kappa_p * t), math.exp(prm.q * prm.kappa_q * t)
            lin_sym = w1 * self.sym1 + w2 * self.sym2
        lin = np.fft.ifftn(lin_sym * spec).real
        grad = lin - wp * up * u - prm.mu * wq * uq * u
        m = _mass(u, self.cell)
        lam = float(np.sum(grad * u)) * self.cell / m
        resid = grad - lam * u
        l1 = np.fft.ifftn(w1 * self.sym1 * spec).real
        return {
            "cf": cf,
            "t": t,
            "grad": grad,
            "resid": resid,
            "lam": lam,
            "mass": m,
            "energy": fiber_value(cf, t, prm),
            "pohozaev": _pohozaev(cf, prm),
            "grad_norm": math.sqrt(_mass(resid, self.cell)),
            "l1norm": math.sqrt(_mass(l1, self.cell)),
        }

    def direction(self, u: np.ndarray, grad: np.ndarray, t: float = 0.0) -> np.ndarray:
        if t == 0.0:
            pre = self.precond
        else:
            prm = self.prm
            pre = 1.0 / (1.0 + math.exp(2 * prm.s1 * t) * self.sym1 + math.exp(2 * prm.s2 * t) * self.sym2)
        pg = np.fft.ifftn(pre * np.fft.fftn(grad)).real
        pu = np.fft.ifftn(pre * np.fft.fftn(u)).real
        beta = float(np.sum(pg * u)) / float(np.sum(pu * u))
        return pg - beta * pu

    def pohozaev_gradient(self, u: np.ndarray) -> np.ndarray:
        """L2 gradient of ``P``."""
        prm = self.prm
        spec = np.fft.fftn(u)
        absu = np.abs(u)
        lin = np.fft.ifftn((2 * prm.s1 * self.sym1 + 2 * prm.s2 * self.sym2) * spec).real
        return (
            lin
            - prm.p * prm.kappa_p * absu ** (prm.p - 2) * u
            - prm.mu * prm.q * prm.kappa_q * absu ** (prm.q - 2) * u
        )

    def precondition(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(self.precond * np.fft.fftn(f)).real

    def project(self, u: np.ndarray, a: float) -> np.ndarray:
        m = _mass(u, self.cell)
        if not m > 0:
            raise ProjectionError("iterate collapsed to zero")
        return u * (a / math.sqrt(m))


def _pohozaev(cf: FiberCoefficients, prm: ProblemParams) -> float:
    return math.fsum(
        (prm.s1 * cf.A, prm.s2 * cf.B, -prm.kappa_p * cf.C, -prm.mu * prm.kappa_q * cf.D)
    )


def constrained_gradient(u: Field, prm: ProblemParams) -> Field:
    """Tangential part ``g - (<g,u>/a^2) u`` of the L2 gradient of E."""
    st = _Ops(u.grid, prm).state(u.values)
    return Field(u.grid, st["resid"])


def lagrange_multiplier(u: Field, prm: ProblemParams) -> float:
    """``(A + B - mu D - C) / mass(u)``."""
    m = _mass(u.values, u.grid.cell_volume)
    if not m > 0:
        raise ProjectionError("Lagrange multiplier of a zero field is undefined")
    ops = _Ops(u.grid, prm)
    cf = ops.state(u.values)["cf"]
    return (cf.A + cf.B - prm.mu * cf.D - cf.C) / m


def pde_residual(u: Field, lam: float, prm: ProblemParams, with_flag: bool = False):
    """Relative L2 residual of the stationary equation.

    Normalized by ``|(-Delta)^{s1} u|_2``; a zero field returns 0 and, with
    ``with_flag``, the degenerate flag set.
    """
    ops = _Ops(u.grid, prm)
    v = u.values
    spec = np.fft.fftn(v)
    absv = np.abs(v)
    r = (
        np.fft.ifftn(ops.sym12 * spec).real
        - lam * v
        - prm.mu * absv ** (prm.q - 2) * v
        - absv ** (prm.p - 2) * v
    )
    denom = math.sqrt(_mass(np.fft.ifftn(ops.sym1 * spec).real, ops.cell))
    if denom == 0.0:
        return (0.0, True) if with_flag else 0.0
    out = math.sqrt(_mass(r, ops.cell)) / denom
    return (out, False) if with_flag else out


# ---------------------------------------------------------------------------
# Seeds


def gaussian_seed(grid: GridDescriptor, a: float, width: float = 1.0) -> Field:
    r2 = grid.radius_sq()
    return project_to_sphere(Field(grid, np.exp(-r2 / (2.0 * width * width))), a)


def _seed_for(prm, grid, ops, which: str, t_cap: float) -> np.ndarray:
    """Gaussian whose width places it at the requested fiber critical point.

    A Gaussian of width ``w`` is the dilation of the unit one by ``-log w``, so
    the projection onto the fiber critical point is sampled directly.
    """
    w0 = min(1.0, grid.box_half_length / 6.0)
    base = gaussian_seed(grid, prm.a, w0).values
    geo = fiber_geometry(ops.state(base)["cf"], prm)
    t = geo.xi if which == "xi" else geo.t_max_pt
    t = max(-t_cap, min(t_cap, t))
    width = w0 * math.exp(-t)
    if width < 2.0 * grid.spacing:
        raise ResolutionError(
            f"seed width {width:.3g} at the fiber {which}-projection is below two grid "
            f"spacings ({grid.spacing:.3g}); refine the grid or shrink the box"
        )
    # Keep the bump inside the box; the descent handles the rest.
    width = min(width, grid.box_half_length / 4.0)
    return gaussian_seed(grid, prm.a, width).values


# ---------------------------------------------------------------------------
# Shared iteration machinery


class _StepControl:
    """Halve on rejection; grow by 1.1 after 10 consecutive accepts, capped."""

    def __init__(self, step: float):
        self.step = step
        self.cap = 10.0 * step
        self.accepts = 0

    def accept(self):
        self.accepts += 1
        if self.accepts >= 10:
            self.step = min(self.step * 1.1, self.cap)
            self.accepts = 0

    def reject(self):
        self.step *= 0.5
        self.accepts = 0


# Below this relative energy change, comparisons are round-off; a step is then
# accepted only if it strictly reduces the gradient norm.
ENERGY_ROUNDOFF = 1e-14


def _descends(new, old) -> bool:
    if new["energy"] < old["energy"]:
        return True
    return (
        new["energy"] <= old["energy"] + ENERGY_ROUNDOFF * abs(old["energy"])
        and new["grad_norm"] < old["grad_norm"]
    )


def _record_trace(trace, it, st):
    trace.append((it, st["energy"], st["pohozaev"], st["grad_norm"], st["cf"].A))


def _preconditions(prm: ProblemParams, ct: ConstantsTable):
    """Verdict on the admissibility report and the trust radius."""
    regime = prm.require_regime()
    if regime is Regime.SUBCRITICAL_PAIR:
        ok = check_A1(prm, ct).passed and check_A2(prm, ct).passed
        radius = h_geometry(prm, ct).R0 if check_A1(prm, ct).passed else math.inf
        return regime, ok, radius
    ct.check(prm)
    thr = critical_thresholds(prm, ct)
    return regime, prm.a < thr.a_limit, thr.rho_0


def _finish(ops, u, st, kind, level, it, converged, cfg, verified, trace):
    prm = ops.prm
    fld = Field(ops.grid, u)
    lam = (st["cf"].A + st["cf"].B - prm.mu * st["cf"].D - st["cf"].C) / st["mass"]
    return SolutionRecord(
        field=fld,
        lambda_=lam,
        energy_level=st["energy"],
        pohozaev_residual=st["pohozaev"],
        seminorm_s1=st["cf"].A,
        classification=kind,
        level_name=level,
        iterations=it,
        converged=converged,
        pde_residual=pde_residual(fld, lam, prm),
        grad_norm=st["grad_norm"],
        fiber_class=classify(st["cf"], prm, 1e-8),
        verified=verified,
        seed=cfg.seed,
        trace=trace,
    )


def _converged(st, cfg) -> bool:
    """Gradient criterion; the Pohozaev residual is reported, not iterated on."""
    return st["grad_norm"] <= cfg.grad_tol * st["l1norm"]


def _perturbation(grid, seed: int, amp: float) -> np.ndarray:
    """Smooth reproducible off-centre bump for multi-start runs."""
    if seed == 0:
        return np.zeros(grid.shape)
    rng = np.random.default_rng(seed)
    ell = min(1.0, grid.box_half_length / 6.0)
    r2 = grid.radius_sq()
    shift = [c - ell * rng.uniform(-1.0, 1.0) for c in grid.coordinates()]
    width = ell * rng.uniform(0.7, 1.5)
    bump = np.exp(-sum(x * x for x in shift) / (2.0 * width * width))
    return amp * bump * np.exp(-r2 / (50.0 * ell * ell))


# ---------------------------------------------------------------------------
# Local minimizer


def local_minimize(
    prm: ProblemParams,
    ct: ConstantsTable,
    cfg: SolverConfig = SolverConfig(),
    init: Field | None = None,
    grid: GridDescriptor | None = None,
    override: bool = False,
) -> SolutionRecord:
    """Interior local minimizer of E on the mass sphere inside the trust ball."""
    regime, ok, radius = _preconditions(prm, ct)
    if not ok and not override:
        raise PreconditionError("admissibility conditions fail for these parameters")
    if init is not None:
        grid = init.grid
    grid = grid or GridDescriptor(prm.N, 128, 12.0)
    ops = _Ops(grid, prm)
    a = prm.a
    if regime is Regime.SUBCRITICAL_PAIR:
        limit = 0.95 * radius  # R0 minus the margin 0.05 R0
        level = LevelName.GAMMA
    else:
        limit = radius
        level = LevelName.GAMMABAR

    if init is not None:
        u = ops.project(np.array(init.values), a)
    else:
        u = _seed_for(prm, grid, ops, "xi", cfg.t_cap)
        if cfg.seed:
            u = ops.project(u + _perturbation(grid, cfg.seed, 0.2 * np.max(u)), a)

    def pull_back(v, st):
        rho = math.sqrt(st["cf"].A)
        if rho <= limit:
            return v, st
        t = math.log(0.999 * limit / rho) / prm.s1
        t = max(t, -cfg.t_cap)
        v = ops.project(_dilate_values(v, grid, t), a)
        return v, ops.state(v)

    st = ops.state(u)
    u, st = pull_back(u, st)
    ctrl = _StepControl(cfg.step)
    trace = []
    _record_trace(trace, 0, st)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        d = ops.direction(u, st["grad"])
        while True:
            cand = ops.project(u - ctrl.step * d, a)
            cst = ops.state(cand)
            cand, cst = pull_back(cand, cst)
            if _descends(cst, st):
                break
            ctrl.reject()
            if ctrl.step < 1e-16:
                break
        if ctrl.step < 1e-16:
            it -= 1
            break
        ctrl.accept()
        u, st = cand, cst
        if cfg.symmetrize_every and it % cfg.symmetrize_every == 0:
            sym = ops.project(_rearrange(u, grid), a)
            sst = ops.state(sym)
            if sst["energy"] <= st["energy"] and math.sqrt(sst["cf"].A) <= limit:
                u, st = sym, sst
        _record_trace(trace, it, st)
        if _converged(st, cfg):
            converged = True
            break
    return _finish(
        ops, u, st, SolutionKind.LOCAL_MIN, level, it, converged, cfg, ok, trace
    )


# ---------------------------------------------------------------------------
# Mountain pass via the reduced functional


def _on_pohozaev(ops, v, a, r, tol):
    """Move ``v`` along ``r`` (then back to the sphere) until ``P = 0``.

    Scalar secant iteration; returns ``(u, state)`` or ``None`` on failure.
    """

    def at(g):
        w = ops.project(v + g * r, a)
        return w, ops.state(w)

    g0, (w0, s0) = 0.0, at(0.0)
    if abs(s0["pohozaev"]) <= tol * s0["cf"].scale(ops.prm):
        return w0, s0
    rn = math.sqrt(_mass(r, ops.cell))
    g1 = 1e-6 * math.sqrt(s0["mass"]) / rn
    w1, s1 = at(g1)
    for _ in range(40):
        f0, f1 = s0["pohozaev"], s1["pohozaev"]
        if abs(f1) <= tol * s1["cf"].scale(ops.prm):
            return w1, s1
        if f1 == f0:
            return None
        g2 = g1 - f1 * (g1 - g0) / (f1 - f0)
        # A secant step longer than the field itself has left the local branch.
        if not math.isfinite(g2) or abs(g2) * rn > math.sqrt(s0["mass"]):
            return None
        g0, s0 = g1, s1
        g1 = g2
        w1, s1 = at(g1)
    return None


_PMINUS_MISS = "iterate left the maximizer branch of the Pohozaev set"


def _mp_direction(ops, u, st):
    """Preconditioned gradient of E tangent to ``{mass = a^2, P = 0}``, and
    the preconditioned Pohozaev normal used for retraction."""
    gp = ops.pohozaev_gradient(u)
    pg = ops.precondition(st["grad"])
    pu = ops.precondition(u)
    pn = ops.precondition(gp)
    mat = np.array([[np.sum(pu * u), np.sum(pn * u)], [np.sum(pu * gp), np.sum(pn * gp)]])
    coef = np.linalg.solve(mat, np.array([np.sum(pg * u), np.sum(pg * gp)]))
    d = pg - coef[0] * pu - coef[1] * pn
    normal = pn - float(np.sum(pn * u)) / float(np.sum(pu * u)) * pu
    return d, normal


def _mp_residual(ops, u, st):
    """Gradient of E minus its components along ``u`` and ``grad P``."""
    gp = ops.pohozaev_gradient(u)
    g = st["grad"]
    mat = np.array([[np.sum(u * u), np.sum(gp * u)], [np.sum(u * gp), np.sum(gp * gp)]])
    coef = np.linalg.solve(mat, np.array([np.sum(g * u), np.sum(g * gp)]))
    r = g - coef[0] * u - coef[1] * gp
    return math.sqrt(_mass(r, ops.cell))


def mountain_pass(
    prm: ProblemParams,
    ct: ConstantsTable,
    cfg: SolverConfig = SolverConfig(),
    init: Field | None = None,
    grid: GridDescriptor | None = None,
    override: bool = False,
) -> SolutionRecord:
    """Minimizer of E over the maximizer branch of the Pohozaev set.

    On that branch ``E(u) = max_t E(t * u)``, so this is the reduced
    functional of the fiber maps.  Steps are taken along the tangent space of
    ``{mass = a^2, P = 0}`` and retracted onto ``P = 0`` by a scalar solve, so
    the descent needs no grid interpolation.
    """
    regime, ok, _ = _preconditions(prm, ct)
    if regime is not Regime.SUBCRITICAL_PAIR:
        raise PreconditionError("mountain-pass solutions need the subcritical pair regime")
    if not ok and not override:
        raise PreconditionError("admissibility conditions fail for these parameters")
    if init is not None:
        grid = init.grid
    grid = grid or GridDescriptor(prm.N, 128, 12.0)
    ops = _Ops(grid, prm)
    a = prm.a
    if init is not None:
        u = ops.project(np.array(init.values), a)
        geo = fiber_geometry(ops.state(u)["cf"], prm)
        if abs(geo.t_max_pt) > 1e-12:
            u = ops.project(_dilate_values(u, grid, geo.t_max_pt), a)
    else:
        u = _seed_for(prm, grid, ops, "t", cfg.t_cap)
        if cfg.seed:
            u = ops.project(u + _perturbation(grid, cfg.seed, 0.2 * np.max(u)), a)
            geo = fiber_geometry(ops.state(u)["cf"], prm)
            u = ops.project(_dilate_values(u, grid, geo.t_max_pt), a)
    ptol = 1e-3 * cfg.pohozaev_tol
    st = ops.state(u)
    _, normal = _mp_direction(ops, u, st)
    hit = _on_pohozaev(ops, u, a, normal, ptol)
    if hit is None:
        raise GeometryDegenerateError("could not place the seed on the Pohozaev set")
    u, st = hit
    if not fiber_second_deriv(st["cf"], 0.0, prm) < 0:
        raise GeometryDegenerateError(_PMINUS_MISS)
    ctrl = _StepControl(cfg.step)
    trace = []
    _record_trace(trace, 0, st)
    levels = [st["energy"]]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        d, normal = _mp_direction(ops, u, st)
        while True:
            hit = _on_pohozaev(ops, u - ctrl.step * d, a, normal, ptol)
            if hit is not None:
                cand, cst = hit
                on_branch = fiber_second_deriv(cst["cf"], 0.0, prm) < 0
                if on_branch and _descends(cst, st):
                    break
            ctrl.reject()
            if ctrl.step < 1e-16:
                break
        if ctrl.step < 1e-16:
            it -= 1
            break
        ctrl.accept()
        u, st = cand, cst
        if cfg.symmetrize_every and it % cfg.symmetrize_every == 0:
            sym = ops.project(_rearrange(u, grid), a)
            _, sn = _mp_direction(ops, sym, ops.state(sym))
            hit = _on_pohozaev(ops, sym, a, sn, ptol)
            if (
                hit is not None
                and hit[1]["energy"] <= st["energy"]
                and fiber_second_deriv(hit[1]["cf"], 0.0, prm) < 0
            ):
                u, st = hit
        _record_trace(trace, it, st)
        levels.append(st["energy"])
        if _mp_residual(ops, u, st) <= cfg.grad_tol * st["l1norm"]:
            converged = True
            break
        w = cfg.stagnation_window
        if len(levels) > w and abs(levels[-1 - w] - levels[-1]) <= cfg.grad_tol * abs(levels[-1]):
            converged = True
            break
    return _finish(
        ops, u, st, SolutionKind.MOUNTAIN_PASS, LevelName.SIGMA, it, converged, cfg, ok, trace
    )
