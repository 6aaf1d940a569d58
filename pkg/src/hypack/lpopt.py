"""Certificate search by linear programming over a spline basis.

The unknown profile is ``f = sum_k c_k B_k`` on ``[0, T]``.  The program is

    minimize    f(0)
    subject to  fhat(1) = 1,
                f(t_i) <= 0          at sign abscissae t_i in [2r, T],
                -fhat(lambda_j) <= 0 at principal and complementary abscissae,

so that the optimum times ``vol(B_r)`` is the density bound of the
discretized problem.  The optimal spline is then sampled into a
:class:`RadialProfile`, checked by :func:`certificate.verify` on denser
grids, and violated constraints are added back as cutting planes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from . import certificate as cmod
from .errors import InvalidInputError, OptimizationFailedError
from .geometry import Space, ball_volume
from .simplex import LpProblem, LpSolution, LpStatus, solve_lp
from .spherical import RadialProfile, SpectralGrid, transform_many

__all__ = [
    "LpConfig",
    "SplineBasis",
    "assemble_lp",
    "solve_lp",
    "optimize_bound",
    "OptimizationResult",
]

# Highest spectral parameter per knot interval.  The transform of a spline
# with knot spacing h has a slowly decaying tail that oscillates on the scale
# 1/h; the constraints have to reach well into it or the program is unbounded.
LMAX_PER_KNOT = 7.0
# Cuts go in around every fine-grid dip of the transform below this fraction
# of fhat(1), together with _CUT_HALO neighbours on each side: the dips move a
# little each time the program is re-solved.
_CUT_LEVEL = 1e-7
_CUT_HALO = 2


@dataclass
class LpConfig:
    T: float | None = None
    basis_size: int = 24
    degree: int = 5
    end_order: int = 3
    sign_points: int = cmod.SIGN_POINTS
    principal_points: int = 400
    complementary_points: int = 50
    lmax: float | None = None
    export_samples: int = 1025
    refinement: int = cmod.REFINEMENT
    tol_sign: float = cmod.TOL_SIGN
    tol_spec: float = cmod.TOL_SPEC
    max_rounds: int = 5
    max_iter: int = 50_000

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)

    def resolved(self, space, r):
        """Copy with T and lmax filled in from the defaults."""
        T = self.T
        if T is None:
            T = (4.0 if space.is_hyperbolic else 3.0) * r
        cfg = LpConfig(**{**asdict(self), "T": float(T)})
        if cfg.lmax is None:
            h = SplineBasis(cfg.T, cfg.basis_size, cfg.degree, cfg.end_order).spacing
            cfg.lmax = max(cmod.DEFAULT_LMAX_T / cfg.T, LMAX_PER_KNOT / h)
        cfg.validate(r)
        return cfg

    def validate(self, r):
        if not r > 0:
            raise InvalidInputError("packing radius must be positive")
        if self.T is not None and self.T < 2.0 * r:
            raise InvalidInputError(f"support T={self.T} is shorter than 2r={2 * r}")
        if self.basis_size < 4:
            raise InvalidInputError("basis_size must be at least 4")
        if self.degree not in (3, 5):
            raise InvalidInputError("spline degree must be 3 or 5")
        if not 1 <= self.end_order <= self.degree:
            raise InvalidInputError("end_order must be between 1 and the degree")
        for name in ("sign_points", "principal_points", "export_samples", "refinement", "max_rounds"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be positive")
        if self.complementary_points < 0:
            raise InvalidInputError("complementary_points must be non-negative")
        if self.lmax is not None and not self.lmax > 0:
            raise InvalidInputError("lmax must be positive")


class SplineBasis:
    """Clamped B-splines on ``[0, T]`` restricted to even, compactly supported profiles.

    The first two B-splines are merged so that ``f'(0) = 0``; the last
    ``end_order`` are dropped so that ``f`` and its first ``end_order - 1``
    derivatives vanish at ``T``.  What is left has exactly ``size`` members.
    """

    def __init__(self, T, size, degree=5, end_order=3):
        if int(size) < 4:
            raise InvalidInputError("basis_size must be at least 4")
        if not T > 0:
            raise InvalidInputError("support must be positive")
        self.T = float(T)
        self.size = int(size)
        self.degree = int(degree)
        self.end_order = int(end_order)
        m = self.size + 1 + self.end_order
        interior = m - self.degree - 1
        if interior < 0:
            raise InvalidInputError("basis_size too small for this degree")
        self.breaks = np.linspace(0.0, self.T, interior + 2)
        self.knots = np.r_[[0.0] * self.degree, self.breaks, [self.T] * self.degree]
        self._spline = BSpline(self.knots, np.eye(m), self.degree, extrapolate=False)
        M = np.eye(m)[:, : m - self.end_order]
        self._map = np.column_stack([M[:, 0] + M[:, 1], M[:, 2:]])

    @property
    def spacing(self):
        return float(self.breaks[1] - self.breaks[0])

    def __call__(self, t, nu=0):
        """Basis values, shape ``(size, len(t))``; zero outside ``[0, T]``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        inside = (t >= 0) & (t <= self.T)
        raw = self._spline(np.clip(t, 0.0, self.T), nu)
        raw = np.where(inside[:, None], np.nan_to_num(raw), 0.0)
        return self._map.T @ raw.T

    def combine(self, coef):
        coef = np.asarray(coef, dtype=float)
        return lambda t: coef @ self(t)


@dataclass
class AssembledLp:
    problem: LpProblem
    basis: SplineBasis
    sign_abscissae: np.ndarray
    grid: SpectralGrid
    at_one: np.ndarray
    spectral: np.ndarray


def assemble_lp(space, r, T, basis_size, grid, sign_abscissae, degree=5, end_order=3):
    """Build the discretized program; columns are the basis functions."""
    r = float(r)
    T = float(T)
    if not r > 0:
        raise InvalidInputError("packing radius must be positive")
    if T < 2.0 * r:
        raise InvalidInputError(f"support T={T} is shorter than 2r={2 * r}")
    if int(basis_size) < 4:
        raise InvalidInputError("basis_size must be at least 4")
    grid.validate(space)
    ts = np.asarray(sign_abscissae, dtype=float).ravel()
    if ts.size and (ts.min() < 2.0 * r * (1 - 1e-12) or ts.max() > T * (1 + 1e-12)):
        raise InvalidInputError("sign abscissae must lie in [2r, T]")
    basis = SplineBasis(T, basis_size, degree, end_order)

    spec, one = transform_many(space, basis.breaks, basis, grid.nu2)
    sign = basis(ts)
    a_ub = np.vstack([sign.T, -spec.T])
    if not np.any(np.abs(np.vstack([a_ub, one[None]])).max(axis=0) > 0):
        raise InvalidInputError("degenerate basis: every column vanishes")
    labels = (
        ["at_one"]
        + [f"sign t={t:.6g}" for t in ts]
        + [f"principal {x:.6g}" for x in grid.principal]
        + [f"complementary {x:.6g}" for x in grid.complementary]
    )
    problem = LpProblem(basis(np.array([0.0]))[:, 0], one[None, :], [1.0], a_ub, np.zeros(a_ub.shape[0]), labels)
    return AssembledLp(problem, basis, ts, grid, one, spec)


@dataclass
class OptimizationResult:
    certificate: cmod.Certificate
    bound: cmod.DensityBound
    report: cmod.VerificationReport
    solution: LpSolution
    lp_bound: float
    rounds: int
    config: LpConfig
    history: list = field(default_factory=list)

    def run_report(self):
        return {
            "format": "lprun/1",
            "space": self.certificate.space.to_dict(),
            "r": self.certificate.r,
            "lp_config": asdict(self.config),
            "bound": self.bound.to_dict(),
            "lp_bound": self.lp_bound,
            "lp_status": self.solution.status.value,
            "iterations": self.solution.iterations,
            "lp_residual": self.solution.residual,
            "rounds": self.rounds,
            "history": self.history,
            "verification": self.report.to_dict(),
        }


def _local_minima(values):
    v = np.asarray(values)
    if v.size < 3:
        return np.arange(v.size)
    inner = np.flatnonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:])) + 1
    return np.r_[0, inner, v.size - 1] if v.size else inner


def _near_dips(values, params, level):
    """Fine-grid parameters around each local minimum below ``level``."""
    out = []
    for i in _local_minima(values):
        if values[i] < level:
            lo, hi = max(0, i - _CUT_HALO), min(values.size, i + _CUT_HALO + 1)
            out.extend(params[lo:hi])
    return out


def _cuts(report, cert):
    """New spectral and sign abscissae where the verification found trouble."""
    table = report.table
    grid = table.grid
    level = _CUT_LEVEL * abs(table.at_one)
    new_p = _near_dips(table.principal_values, grid.principal, level)
    new_c = _near_dips(table.complementary_values, grid.complementary, level)
    for series, param, value in report.dips:
        if value < level:
            (new_p if series == "principal" else new_c).append(param)
    ts = cmod.sign_abscissae(cert, report.refinement)
    new_s = ts[cert.profile(ts) > 0.0]
    return np.array(new_p), np.array(new_c), np.asarray(new_s)


def _merge(base, extra):
    if extra.size == 0:
        return base
    return np.unique(np.r_[base, extra])


def optimize_bound(space, r, config=None, provenance=None):
    """Best certificate over the spline class for radius ``r``, verified."""
    if not isinstance(space, Space):
        raise InvalidInputError("space must be a Space")
    r = float(r)
    cfg = (config or LpConfig()).resolved(space, r)
    T = cfg.T
    base_grid = SpectralGrid.uniform(space, cfg.lmax, cfg.principal_points, cfg.complementary_points)
    principal = base_grid.principal
    complementary = base_grid.complementary
    sign_pts = np.linspace(2.0 * r, T, cfg.sign_points)
    provenance = provenance or f"lpopt {space.kind} n={space.n} r={r:.17g}"
    history = []
    last = None
    for rnd in range(1, cfg.max_rounds + 1):
        lp = assemble_lp(
            space, r, T, cfg.basis_size, SpectralGrid(principal, complementary), sign_pts,
            cfg.degree, cfg.end_order,
        )
        sol = solve_lp(lp.problem, cfg.max_iter)
        entry = {
            "round": rnd,
            "rows": lp.problem.shape[0],
            "status": sol.status.value,
            "iterations": sol.iterations,
        }
        if sol.status != LpStatus.OPTIMAL:
            history.append(entry)
            raise OptimizationFailedError(
                f"LP round {rnd} ended with status {sol.status.value}", margins={"history": history}
            )
        func = lp.basis.combine(sol.coefficients)
        profile = RadialProfile.from_function(func, T, cfg.export_samples, space, bc_origin="even")
        cert = cmod.Certificate(space, r, profile, base_grid, provenance, cfg.sign_points)
        report = cmod.verify(cert, cfg.tol_sign, cfg.tol_spec, cfg.refinement)
        lp_bound = ball_volume(space, r) * sol.objective_value
        entry.update(
            lp_bound=lp_bound,
            sign_margin=report.sign_margin,
            spectral_margin=report.spectral_margin,
            admissible=report.admissible,
        )
        history.append(entry)
        last = (cert, report)
        if report.admissible:
            return OptimizationResult(
                cert, cmod.bound(cert, report), report, sol, lp_bound, rnd, cfg, history
            )
        new_p, new_c, new_s = _cuts(report, cert)
        if new_p.size + new_c.size + new_s.size == 0:
            break
        principal = _merge(principal, new_p)
        complementary = _merge(complementary, new_c)
        sign_pts = _merge(sign_pts, new_s)
    cert, report = last
    raise OptimizationFailedError(
        f"certificate failed verification after {len(history)} rounds "
        f"(sign margin {report.sign_margin:.3e}, spectral margin {report.spectral_margin:.3e})",
        margins={
            "sign_margin": report.sign_margin,
            "spectral_margin": report.spectral_margin,
            "at_one": report.at_one,
            "history": history,
        },
    )


def lattice_floor(n):
    """Best known lattice packing density for n in {1, 2, 8} (validity floors)."""
    floors = {1: 1.0, 2: math.pi / math.sqrt(12.0), 8: math.pi**4 / 384.0}
    if n not in floors:
        raise InvalidInputError("lattice floor available for n in {1, 2, 8} only")
    return floors[n]
