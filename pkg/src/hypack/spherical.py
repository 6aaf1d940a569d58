"""Spherical functions and the spherical transform of radial profiles.

On H^n the spherical function phi_lam is the radial solution of

    phi'' + (n-1) coth(t) phi' + (lam^2 + rho^2) phi = 0,   phi(0) = 1,

equivalently the Gauss function 2F1((rho+i lam)/2, (rho-i lam)/2; n/2; -sinh^2 t).
The hypergeometric series is summed for t <= 1e-2 and handed to an adaptive
Runge-Kutta integrator beyond that.  Complementary-series functions phi_{is}
use the same code with lam^2 = -s^2.  On R^n the kernel is the normalized
Bessel function 0F1(; n/2; -(lam t)^2 / 4).

The transform of a radial profile f supported in [0, T] is

    fhat(lam) = int_0^T f(t) phi_lam(t) A(t) dt,

A(t) being the sphere area; ``fhat(1)`` (the trivial spherical function) is
the plain volume integral of f.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import hyp0f1

from . import lanczos
from .errors import InvalidInputError, NumericalAccuracyError
from .geometry import Space, sphere_area
from .quadrature import gl_nodes, subdivide

SERIES_SWITCH = 1e-2
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12
_BATCH = 96
_QUAD_ORDER = 6
_QUAD_RTOL = 1e-9
# max (largest spectral parameter) x (panel width); keeps panels below a third of a period
_OSC = 2.0


# ---------------------------------------------------------------------------
# kernels


def spectral_square(space, lam):
    """lam^2 for a principal parameter, -s^2 for ``lam = i s`` (complementary)."""
    lam = complex(lam)
    if lam.imag == 0.0:
        return lam.real**2
    if lam.real != 0.0:
        raise InvalidInputError("spectral parameter must be real or purely imaginary")
    s = abs(lam.imag)
    if not space.is_hyperbolic:
        raise InvalidInputError("Euclidean space has no complementary series")
    if s > space.rho * (1.0 + 1e-12):
        raise InvalidInputError(f"complementary parameter {s} outside (0, rho={space.rho}]")
    return -(s**2)


def _series(n, nu2, t):
    """2F1 series and its t-derivative at small t; rows follow ``nu2``."""
    rho = (n - 1) / 2.0
    z = np.sinh(t) ** 2
    nu2 = np.asarray(nu2, dtype=float)[:, None]
    val = np.ones((nu2.shape[0], t.size))
    dval = np.zeros_like(val)
    coef = np.ones_like(nu2)
    zk = np.ones_like(z)
    k = 0
    while True:
        coef = -coef * ((rho / 2.0 + k) ** 2 + nu2 / 4.0) / ((n / 2.0 + k) * (k + 1.0))
        dval += coef * (k + 1.0) * zk
        zk = zk * z
        term = coef * zk
        val += term
        k += 1
        if k > 2 and np.abs(term).max() < 1e-16 * max(1.0, np.abs(val).max()):
            break
        if k > 200:
            raise NumericalAccuracyError("hypergeometric series did not converge", np.abs(term).max())
    return val, dval * 2.0 * np.sinh(t) * np.cosh(t)


def _ode_batch(n, nu2, t_eval, rtol, atol):
    K = nu2.size
    rho2 = ((n - 1) / 2.0) ** 2
    shift = nu2 + rho2
    v0, d0 = _series(n, nu2, np.array([SERIES_SWITCH]))

    def rhs(t, y):
        p = y[:K]
        dp = y[K:]
        return np.concatenate([dp, -(n - 1) / math.tanh(t) * dp - shift * p])

    sol = solve_ivp(
        rhs,
        (SERIES_SWITCH, float(t_eval[-1])),
        np.concatenate([v0[:, 0], d0[:, 0]]),
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise NumericalAccuracyError(f"spherical-function ODE failed: {sol.message}")
    return sol.y[:K]


def _hyperbolic_table(n, nu2, t, rtol=ODE_RTOL, atol=ODE_ATOL):
    out = np.empty((nu2.size, t.size))
    small = t <= SERIES_SWITCH
    if small.any():
        out[:, small] = _series(n, nu2, t[small])[0]
    large = np.flatnonzero(~small)
    if large.size == 0:
        return out
    order = np.argsort(nu2, kind="stable")
    tl = t[large]
    for start in range(0, nu2.size, _BATCH):
        idx = order[start:start + _BATCH]
        out[np.ix_(idx, large)] = _ode_batch(n, nu2[idx], tl, rtol, atol)
    return out


def _euclidean_table(n, nu2, t):
    lam = np.sqrt(np.maximum(nu2, 0.0))
    x = np.outer(lam, t)
    if n == 1:
        return np.cos(x)
    return hyp0f1(n / 2.0, -0.25 * x * x)


def phi_table(space, nu2, t):
    """phi on the outer grid (spectral squares ``nu2``) x (radii ``t``)."""
    nu2 = np.atleast_1d(np.asarray(nu2, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise InvalidInputError("radii must be non-negative")
    if not space.is_hyperbolic:
        if np.any(nu2 < 0):
            raise InvalidInputError("Euclidean space has no complementary series")
        return _euclidean_table(space.n, nu2, t)
    if np.any(nu2 < -(space.rho**2) * (1.0 + 1e-12)):
        raise InvalidInputError("complementary parameter exceeds rho")
    order = np.argsort(t, kind="stable")
    ts = t[order]
    # ODE output must follow strictly increasing abscissae
    uniq, inverse = np.unique(ts, return_inverse=True)
    vals = _hyperbolic_table(space.n, nu2, uniq)[:, inverse]
    out = np.empty_like(vals)
    out[:, order] = vals
    return out


def spherical_function(space, lam, t):
    """phi_lam(t) for one spectral parameter (real, or ``1j * s`` with 0 < s <= rho)."""
    nu2 = spectral_square(space, lam)
    vals = phi_table(space, [nu2], t)[0]
    return vals if np.ndim(t) else float(vals[0])


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Compactly supported radial function given by samples on ``[0, T]``.

    Interpolation is a cubic spline, natural at ``T``; at the origin it is
    natural too unless ``bc_origin="even"``, which clamps ``f'(0) = 0`` (the
    smoothness condition for radial functions).  The profile vanishes for
    ``t > T``.
    """

    t: np.ndarray
    f: np.ndarray
    space: Space | None = None
    bc_origin: str = "natural"
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        f = np.array(self.f, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2:
            raise InvalidInputError("profile needs matching 1-d sample arrays of length >= 2")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise InvalidInputError("profile abscissae must start at 0 and increase strictly")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(f))):
            raise InvalidInputError("profile samples must be finite")
        if self.bc_origin not in ("natural", "even"):
            raise InvalidInputError(f"unknown origin condition {self.bc_origin!r}")
        t.setflags(write=False)
        f.setflags(write=False)
        start = (1, 0.0) if self.bc_origin == "even" else (2, 0.0)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "_spline", CubicSpline(t, f, bc_type=(start, (2, 0.0))))

    @property
    def support(self):
        return float(self.t[-1])

    @property
    def coefficients(self):
        """Piecewise cubic coefficients, shape (4, m), highest power first."""
        return self._spline.c

    def __call__(self, t, nu=0):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise InvalidInputError("profile is evaluated at t >= 0 only")
        out = self._spline(np.minimum(t_arr, self.support), nu)
        out = np.where(t_arr > self.support, 0.0, out)
        # interpolation nodes reproduce the stored samples exactly
        hit = np.searchsorted(self.t, t_arr)
        hit = np.clip(hit, 0, self.t.size - 1)
        exact = self.t[hit] == t_arr
        if nu == 0 and np.any(exact):
            out = np.where(exact, self.f[hit], out)
        return float(out) if out.ndim == 0 else out

    def scaled(self, c):
        return RadialProfile(self.t, c * self.f, self.space, self.bc_origin)

    @classmethod
    def from_function(cls, func, T, samples=1025, space=None, bc_origin="even"):
        t = np.linspace(0.0, T, samples)
        return cls(t, func(t), space, bc_origin)

    def to_dict(self):
        d = {"T": self.support, "t": self.t.tolist(), "f": self.f.tolist()}
        if self.bc_origin != "natural":
            d["bc_origin"] = self.bc_origin
        return d

    @classmethod
    def from_dict(cls, d, space=None):
        prof = cls(d["t"], d["f"], space, d.get("bc_origin", "natural"))
        if "T" in d and abs(float(d["T"]) - prof.support) > 1e-12 * max(1.0, prof.support):
            raise InvalidInputError("profile T does not match its last abscissa")
        return prof


# ---------------------------------------------------------------------------
# spectral grids and transform tables


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    principal: np.ndarray
    complementary: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        p = np.array(self.principal, dtype=float).ravel()
        c = np.array(self.complementary, dtype=float).ravel()
        if p.size == 0 or np.any(p < 0) or np.any(np.diff(p) <= 0):
            raise InvalidInputError("principal abscissae must be non-negative and increasing")
        if c.size and (np.any(c <= 0) or np.any(np.diff(c) <= 0)):
            raise InvalidInputError("complementary abscissae must be positive and increasing")
        object.__setattr__(self, "principal", p)
        object.__setattr__(self, "complementary", c)

    @classmethod
    def uniform(cls, space, lmax, n_principal=400, n_complementary=50):
        if not lmax > 0:
            raise InvalidInputError("lmax must be positive")
        principal = np.linspace(0.0, lmax, max(2, int(n_principal)))
        comp = np.zeros(0)
        if space.is_hyperbolic and n_complementary > 0:
            comp = space.rho * np.arange(1, n_complementary + 1) / n_complementary
        return cls(principal, comp)

    def validate(self, space):
        if self.complementary.size:
            if not space.is_hyperbolic:
                raise InvalidInputError("Euclidean grids carry no complementary series")
            if self.complementary.max() > space.rho * (1.0 + 1e-12):
                raise InvalidInputError("complementary abscissae must lie in (0, rho]")
        return self

    @property
    def lmax(self):
        return float(self.principal[-1])

    @property
    def nu2(self):
        return np.r_[self.principal**2, -self.complementary**2]

    def refined(self, factor):
        """Grid ``factor`` times denser on the same ranges."""
        factor = int(factor)
        if factor < 1:
            raise InvalidInputError("refinement must be >= 1")
        p = self.principal
        fine = subdivide(p, factor)
        c = self.complementary
        if c.size:
            c = np.linspace(c[0] / factor, c[-1], c.size * factor)
        return SpectralGrid(fine, c)

    def to_dict(self):
        return {"principal": self.principal.tolist(), "complementary": self.complementary.tolist()}


@dataclass
class TransformTable:
    grid: SpectralGrid
    principal_values: np.ndarray
    complementary_values: np.ndarray
    at_one: float
    meta: dict = field(default_factory=dict)

    def rows(self):
        for lam, v in zip(self.grid.principal, self.principal_values):
            yield "principal", float(lam), float(v)
        for s, v in zip(self.grid.complementary, self.complementary_values):
            yield "complementary", float(s), float(v)
        # the trivial spherical function is phi at i*rho (lambda = 0 in R^n)
        rho = (self.meta.get("n", 1) - 1) / 2.0 if self.meta.get("kind") == "hyperbolic" else 0.0
        yield "trivial", rho, float(self.at_one)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series", "parameter", "value"])
        for tag, par, val in self.rows():
            w.writerow([tag, format(par, ".17g"), format(val, ".17g")])
        return buf.getvalue()

    def to_dict(self):
        return {
            "grid": self.grid.to_dict(),
            "principal_values": np.asarray(self.principal_values).tolist(),
            "complementary_values": np.asarray(self.complementary_values).tolist(),
            "at_one": float(self.at_one),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d):
        g = d["grid"]
        return cls(
            SpectralGrid(g["principal"], g.get("complementary", [])),
            np.asarray(d["principal_values"], dtype=float),
            np.asarray(d.get("complementary_values", []), dtype=float),
            float(d["at_one"]),
            dict(d.get("meta", {})),
        )

    @property
    def min_value(self):
        vals = np.r_[self.principal_values, self.complementary_values]
        return float(vals.min())


def _panels(breaks, lmax):
    h = float(np.diff(breaks).max())
    pieces = max(1, int(math.ceil(lmax * h / _OSC)))
    return subdivide(breaks, pieces)


def transform_many(space, breaks, funcs, nu2, order=_QUAD_ORDER, check=True, rtol=_QUAD_RTOL):
    """Transforms of several radial functions sharing quadrature breakpoints.

    ``funcs(t)`` returns an (F, len(t)) array.  Returns ``(values, at_one)``
    with ``values`` of shape (F, len(nu2)).  With ``check`` the panel count
    is doubled and both results must agree to ``rtol`` relative to the
    absolute volume integral of each function.
    """
    nu2 = np.asarray(nu2, dtype=float)
    lmax = float(np.sqrt(max(nu2.max(initial=0.0), 0.0)))
    base = _panels(np.asarray(breaks, dtype=float), lmax)

    def run(bk):
        t, w = gl_nodes(bk, order)
        F = np.atleast_2d(funcs(t)) * (w * sphere_area(space, t))
        return F @ phi_table(space, nu2, t).T, F.sum(axis=1), np.abs(F).sum(axis=1)

    vals, one, mass = run(subdivide(base, 2) if check else base)
    if check:
        coarse, one_c, _ = run(base)
        scale = np.maximum(mass, 1e-300)[:, None]
        resid = float(np.max(np.abs(vals - coarse) / scale, initial=0.0))
        resid = max(resid, float(np.max(np.abs(one - one_c) / scale[:, 0], initial=0.0)))
        if resid > rtol:
            raise NumericalAccuracyError(
                f"transform quadrature unconverged (panel-doubling residual {resid:.3e})", resid
            )
    return vals, one


def forward_transform(space, profile, grid, check=True):
    """Spherical transform of ``profile`` on ``grid`` (both series) plus fhat(1)."""
    grid.validate(space)
    vals, one = transform_many(space, profile.t, lambda t: profile(t)[None, :], grid.nu2, check=check)
    k = grid.principal.size
    return TransformTable(
        grid,
        vals[0, :k].copy(),
        vals[0, k:].copy(),
        float(one[0]),
        {"kind": space.kind, "n": space.n},
    )


def volume_integral(space, profile, panels_per_interval=2, order=8):
    """Plain quadrature of the volume integral of a profile (independent of the transform)."""
    t, w = gl_nodes(subdivide(profile.t, panels_per_interval), order)
    return float(np.dot(w, profile(t) * sphere_area(space, t)))


# ---------------------------------------------------------------------------
# Plancherel inversion


def plancherel_density(space, lam):
    """|c(lam)|^-2 from the Harish-Chandra c-function (unnormalized; see ``calibration_constant``)."""
    lam = np.asarray(lam, dtype=float)
    n = space.n
    if not space.is_hyperbolic:
        return np.abs(lam) ** (n - 1)
    rho = space.rho
    out = np.zeros(lam.shape)
    nz = lam != 0.0
    il = 1j * lam[nz]
    log_d = (
        2.0 * lanczos.log_abs_gamma((il + rho) / 2.0)
        + 2.0 * lanczos.log_abs_gamma((il + (n + 1) / 2.0) / 2.0)
        - 2.0 * lanczos.log_abs_gamma(il)
        - 2.0 * rho * math.log(2.0)
        - 2.0 * math.lgamma(n / 2.0)
    )
    out[nz] = np.exp(log_d)
    return out


_CAL_SIGMA = 0.5
_CAL_T = 4.0
_CAL_SAMPLES = 401
_CAL_LMAX = 30.0
_CAL_NODES = 1201


def _reference_profile(space):
    return RadialProfile.from_function(
        lambda t: np.exp(-0.5 * (t / _CAL_SIGMA) ** 2), _CAL_T, _CAL_SAMPLES, space, "even"
    )


@lru_cache(maxsize=None)
def _calibration(kind, n):
    space = Space(kind, n)
    ref = _reference_profile(space)
    grid = SpectralGrid(np.linspace(0.0, _CAL_LMAX, _CAL_NODES))
    table = forward_transform(space, ref, grid)
    lam = grid.principal
    integral = simpson(table.principal_values * plancherel_density(space, lam), x=lam)
    return float(ref(0.0) / integral)


def calibration_constant(space):
    """Global constant C in f(t) = C int fhat(lam) phi_lam(t) |c(lam)|^-2 dlam.

    Fixed by requiring the identity at t = 0 for a truncated Gaussian
    (sigma 0.5, support [0, 4]); computed once per space and cached.
    """
    return _calibration(space.kind, space.n)


def _inverse_values(space, lam, fhat, t_grid):
    weights = fhat * plancherel_density(space, lam)
    phi = phi_table(space, lam**2, t_grid)
    return calibration_constant(space) * simpson(weights[:, None] * phi, x=lam, axis=0)


def inverse_transform(space, table, t_grid, tol=None):
    """Numerical inverse transform of a densely sampled principal-series table.

    The integral over ``[0, lmax]`` uses Simpson's rule on the table's own
    abscissae.  With ``tol`` set, the result is compared with the inverse
    computed from the first three quarters of the spectral range and a
    :class:`NumericalAccuracyError` is raised if they differ by more than
    ``tol`` in sup-norm (a truncation estimate).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    lam = table.grid.principal
    if lam.size < 3:
        raise InvalidInputError("inverse transform needs at least three spectral samples")
    fhat = np.asarray(table.principal_values, dtype=float)
    values = _inverse_values(space, lam, fhat, t_grid)
    if tol is not None:
        cut = lam <= 0.75 * lam[-1]
        if cut.sum() >= 3:
            partial = _inverse_values(space, lam[cut], fhat[cut], t_grid)
            est = float(np.max(np.abs(values - partial)))
            if est > tol:
                raise NumericalAccuracyError(
                    f"spectral truncation too coarse (estimated residual {est:.3e})", est
                )
    return RadialProfile(t_grid, values, space, "even")
