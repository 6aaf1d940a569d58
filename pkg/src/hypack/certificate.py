"""LP certificates: admissibility checks and the density bound.

A certificate is a radial profile f with

    (i)  f(t) <= 0 for t >= 2r,
    (ii) fhat >= 0 on the spherical spectrum and fhat(1) > 0,

and it bounds the packing density of r-balls by vol(B_r) f(0) / fhat(1).

Verification here is grid evidence in floating point, not a proof: the sign
condition is checked exactly for the cubic interpolant (endpoints plus all
interior critical points), the spectral condition on a finite grid that is
``refinement`` times denser than the construction grid, truncated at the
grid's ``lmax``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, InvalidInputError
from .geometry import Space, ball_volume
from .spherical import RadialProfile, SpectralGrid, TransformTable, forward_transform, transform_many

FORMAT = "cert/1"
TOL_SIGN = 1e-9
TOL_SPEC = 1e-8
REFINEMENT = 8
SIGN_POINTS = 200
# spectral cut-off for certificates that carry no grid of their own, in units of 1/T
DEFAULT_LMAX_T = 40.0
# Local zoom around the lowest minima of the refined spectral grid: dips of
# the transform near its double zeros can be far narrower than any fixed grid.
ZOOM_MINIMA = 32
ZOOM_POINTS = 9
ZOOM_PASSES = 3
ZOOM_LEVEL = 1e-3


def default_grid(space, T, lmax=None, n_principal=400, n_complementary=50):
    if lmax is None:
        lmax = DEFAULT_LMAX_T / T
    return SpectralGrid.uniform(space, lmax, n_principal, n_complementary)


@dataclass
class Certificate:
    space: Space
    r: float
    profile: RadialProfile
    spectral_grid: SpectralGrid | None = None
    provenance: str = ""
    sign_points: int = SIGN_POINTS

    def __post_init__(self):
        self.r = float(self.r)
        if not self.r > 0:
            raise InvalidInputError("packing radius must be positive")
        T = self.profile.support
        if T < 2.0 * self.r * (1.0 - 1e-12):
            raise InvalidInputError(f"profile support {T} is shorter than 2r = {2 * self.r}")
        if self.spectral_grid is None:
            self.spectral_grid = default_grid(self.space, T)
        self.spectral_grid.validate(self.space)

    @property
    def T(self):
        return self.profile.support

    def scaled(self, c):
        return Certificate(
            self.space, self.r, self.profile.scaled(c), self.spectral_grid, self.provenance, self.sign_points
        )

    def to_dict(self):
        g = self.spectral_grid
        return {
            "format": FORMAT,
            "space": self.space.to_dict(),
            "r": self.r,
            "profile": self.profile.to_dict(),
            "provenance": self.provenance,
            "spectral": {
                "lmax": g.lmax,
                "n_principal": int(g.principal.size),
                "n_complementary": int(g.complementary.size),
            },
        }

    @classmethod
    def from_dict(cls, d):
        fmt = d.get("format", FORMAT)
        if fmt != FORMAT:
            raise InvalidInputError(f"unsupported certificate format {fmt!r}")
        space = Space.from_dict(d["space"])
        profile = RadialProfile.from_dict(d["profile"], space)
        spec = d.get("spectral")
        grid = None
        if spec:
            grid = default_grid(
                space,
                profile.support,
                float(spec["lmax"]),
                int(spec.get("n_principal", 400)),
                int(spec.get("n_complementary", 50)),
            )
        return cls(space, float(d["r"]), profile, grid, str(d.get("provenance", "")))


def evaluate(cert, t):
    """Profile value; zero beyond the support."""
    return cert.profile(t)


@dataclass
class VerificationReport:
    sign_margin: float
    sign_argmax: float
    spectral_margin: float
    spectral_argmin: tuple
    at_one: float
    admissible: bool
    tol_sign: float
    tol_spec: float
    refinement: int
    grids: dict
    required: str = "both"
    table: TransformTable | None = field(default=None, repr=False)
    dips: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "sign_margin": self.sign_margin,
            "sign_argmax": self.sign_argmax,
            "spectral_margin": self.spectral_margin,
            "spectral_argmin": {"series": self.spectral_argmin[0], "parameter": self.spectral_argmin[1]},
            "at_one": self.at_one,
            "admissible": self.admissible,
            "tol_sign": self.tol_sign,
            "tol_spec": self.tol_spec,
            "refinement": self.refinement,
            "required_series": self.required,
            "grids": self.grids,
            "tolerances": "relative: tol_sign to max |f|, tol_spec to fhat(1)",
            "note": "floating-point grid evidence, not an interval-arithmetic proof",
        }


def _cubic_critical_points(profile, lo, hi):
    """Interior critical points of each spline segment that meet [lo, hi]."""
    c = profile.coefficients
    x = profile.t
    a, b, d = 3.0 * c[0], 2.0 * c[1], c[2]
    out = []
    disc = b * b - 4.0 * a * d
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        # stable quadratic roots; linear case when a == 0
        q = -0.5 * (b + np.copysign(sq, b))
        r1 = np.where(a != 0, q / a, np.where(b != 0, -d / b, np.nan))
        r2 = np.where(q != 0, d / q, np.nan)
    h = np.diff(x)
    for r in (r1, r2):
        good = ok & np.isfinite(r) & (r > 0) & (r < h)
        pts = x[:-1][good] + r[good]
        out.append(pts[(pts >= lo) & (pts <= hi)])
    return np.concatenate(out)


def sign_abscissae(cert, refinement=1):
    """Points where condition (i) is checked: a uniform grid, knots, and cubic extrema."""
    lo, hi = 2.0 * cert.r, cert.T
    grid = np.linspace(lo, hi, max(2, cert.sign_points * int(refinement)))
    knots = cert.profile.t[(cert.profile.t >= lo) & (cert.profile.t <= hi)]
    pts = np.concatenate([grid, knots, _cubic_critical_points(cert.profile, lo, hi)])
    return np.unique(pts)


def sign_margin(cert, refinement=1):
    ts = sign_abscissae(cert, refinement)
    vals = cert.profile(ts)
    i = int(np.argmax(vals))
    return float(vals[i]), float(ts[i])


def _local_minima(v):
    if v.size < 3:
        return np.arange(v.size)
    inner = np.flatnonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:])) + 1
    ends = [i for i, ok in ((0, v[0] <= v[1]), (v.size - 1, v[-1] <= v[-2])) if ok]
    return np.r_[ends[:1], inner, ends[1:]].astype(int)


def _zoom(cert, params, values, series, level):
    """Refine the lowest local minima of one spectral series by bracket sampling.

    Returns a list of ``(series, parameter, value)`` for every evaluated point.
    """
    idx = _local_minima(values)
    idx = idx[values[idx] < level]
    idx = idx[np.argsort(values[idx], kind="stable")[:ZOOM_MINIMA]]
    if idx.size == 0:
        return []
    lo = params[np.maximum(idx - 1, 0)]
    hi = params[np.minimum(idx + 1, params.size - 1)]
    sign = 1.0 if series == "principal" else -1.0
    out = []
    u = np.linspace(0.0, 1.0, ZOOM_POINTS)
    for _ in range(ZOOM_PASSES):
        pts = lo[:, None] + (hi - lo)[:, None] * u[None, :]
        vals, _ = transform_many(
            cert.space, cert.profile.t, lambda t: cert.profile(t)[None, :], sign * pts.ravel() ** 2
        )
        vals = vals[0].reshape(pts.shape)
        out.extend(zip([series] * pts.size, pts.ravel().tolist(), vals.ravel().tolist()))
        best = np.argmin(vals, axis=1)
        rows = np.arange(pts.shape[0])
        new_lo = pts[rows, np.maximum(best - 1, 0)]
        hi = pts[rows, np.minimum(best + 1, ZOOM_POINTS - 1)]
        lo = new_lo
    return out


def verify(cert, tol_sign=TOL_SIGN, tol_spec=TOL_SPEC, refinement=REFINEMENT, required="both"):
    """Check conditions (i) and (ii) and report margins.

    ``tol_sign`` is relative to ``max |f|`` and ``tol_spec`` to ``fhat(1)``,
    so rescaling a certificate by a positive constant never changes the
    verdict.  The reported margins themselves are absolute.

    The spectral margin is the minimum over the refined grid and over a
    local zoom into its lowest minima.  ``required`` selects which spectral
    parameters count for condition (ii): ``"both"`` (principal and
    complementary series, the default) or ``"principal"``.
    """
    refinement = int(refinement)
    if refinement < 1:
        raise InvalidInputError("refinement must be >= 1")
    if required not in ("both", "principal"):
        raise InvalidInputError(f"unknown spectral requirement {required!r}")
    s_margin, s_arg = sign_margin(cert, refinement)

    grid = cert.spectral_grid.refined(refinement)
    if required == "principal":
        grid = SpectralGrid(grid.principal)
    table = forward_transform(cert.space, cert.profile, grid)
    at_one = table.at_one
    level = ZOOM_LEVEL * abs(at_one)
    dips = _zoom(cert, grid.principal, table.principal_values, "principal", level)
    if grid.complementary.size:
        dips += _zoom(cert, grid.complementary, table.complementary_values, "complementary", level)
    points = [("principal", float(x), float(v)) for x, v in zip(grid.principal, table.principal_values)]
    points += [("complementary", float(x), float(v)) for x, v in zip(grid.complementary, table.complementary_values)]
    series, param, spec_margin = min(points + dips, key=lambda p: p[2])
    # both conditions are invariant under f -> c f (c > 0), so the tolerances
    # are taken relative to the size of f and of fhat(1) to keep the verdict so
    sign_scale = float(np.max(np.abs(cert.profile.f)))
    spec_scale = abs(at_one)
    admissible = bool(
        at_one > 0 and s_margin <= tol_sign * sign_scale and spec_margin >= -tol_spec * spec_scale
    )
    grids = {
        "sign_points": int(sign_abscissae(cert, refinement).size),
        "sign_interval": [2.0 * cert.r, cert.T],
        "principal_points": int(grid.principal.size),
        "complementary_points": int(grid.complementary.size),
        "zoom_points": len(dips),
        "lmax": grid.lmax,
        "sign_scale": sign_scale,
        "spectral_scale": spec_scale,
    }
    return VerificationReport(
        s_margin, s_arg, float(spec_margin), (series, float(param)), at_one, admissible,
        tol_sign, tol_spec, refinement, grids, required, table, dips,
    )


@dataclass
class DensityBound:
    value: float
    ball_volume: float
    f0: float
    at_one: float

    def to_dict(self):
        return {
            "value": self.value,
            "components": {"ball_volume": self.ball_volume, "f0": self.f0, "at_one": self.at_one},
        }


def bound(cert, report):
    """vol(B_r) f(0) / fhat(1) for a certificate that passed verification."""
    if not report.admissible:
        raise ContractViolationError("density bound requested for a non-admissible certificate")
    vol = ball_volume(cert.space, cert.r)
    f0 = float(evaluate(cert, 0.0))
    return DensityBound(vol * f0 / report.at_one, vol, f0, report.at_one)
