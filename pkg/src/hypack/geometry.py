"""Hyperbolic space (hyperboloid model) and Euclidean space.

Points of H^n are stored as (n+1)-vectors ``x`` on the upper sheet
``-x0^2 + x1^2 + ... + xn^2 = -1``, ``x0 >= 1``; the base point ``o`` is
``(1, 0, ..., 0)``.  Points of R^n are plain n-vectors with ``o = 0``.
Volumes are Riemannian volumes with curvature -1 (resp. Lebesgue measure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError
from .quadrature import gl_nodes, integrate

HYPERBOLIC = "hyperbolic"
EUCLIDEAN = "euclidean"

_POINT_TOL = 1e-9
_TABLE_NODES = 4096
# panel width for hyperbolic volume integrals; matches the n=2 closed form to 1e-12
_PANEL = 0.25


@dataclass(frozen=True)
class Space:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in (HYPERBOLIC, EUCLIDEAN):
            raise InvalidInputError(f"unknown space kind {self.kind!r}")
        if int(self.n) != self.n:
            raise InvalidInputError("dimension must be an integer")
        lo = 2 if self.kind == HYPERBOLIC else 1
        if self.n < lo:
            raise InvalidInputError(f"{self.kind} space needs n >= {lo}, got {self.n}")

    @classmethod
    def hyperbolic(cls, n):
        return cls(HYPERBOLIC, int(n))

    @classmethod
    def euclidean(cls, n):
        return cls(EUCLIDEAN, int(n))

    @property
    def is_hyperbolic(self):
        return self.kind == HYPERBOLIC

    @property
    def rho(self):
        """Half-sum of positive roots: (n-1)/2 on H^n, 0 on R^n."""
        return (self.n - 1) / 2.0 if self.is_hyperbolic else 0.0

    @property
    def omega(self):
        """Surface area of the unit (n-1)-sphere."""
        return 2.0 * math.pi ** (self.n / 2.0) / math.gamma(self.n / 2.0)

    @property
    def ambient_dim(self):
        return self.n + 1 if self.is_hyperbolic else self.n

    def to_dict(self):
        return {"kind": self.kind, "n": self.n}

    @classmethod
    def from_dict(cls, d):
        return cls(str(d["kind"]).lower(), int(d["n"]))


def origin(space):
    o = np.zeros(space.ambient_dim)
    if space.is_hyperbolic:
        o[0] = 1.0
    return o


def minkowski(x, y):
    """Lorentzian product along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def check_point(space, x):
    """Validate ``x`` (or a stack of points) and return it as a float array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != space.ambient_dim:
        raise InvalidInputError(
            f"expected {space.ambient_dim} coordinates, got {x.shape[-1]}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("point has non-finite coordinates")
    if space.is_hyperbolic:
        q = minkowski(x, x)
        scale = np.maximum(1.0, x[..., 0] ** 2)
        if np.any(np.abs(q + 1.0) > _POINT_TOL * scale) or np.any(x[..., 0] < 1.0 - _POINT_TOL):
            raise InvalidInputError("point is not on the upper sheet of the hyperboloid")
    return x


def cosh_distance(x, y):
    """cosh of the hyperbolic distance, clamped to >= 1 (hyperboloid inputs)."""
    return np.maximum(-minkowski(x, y), 1.0)


def distance(space, x, y):
    """Geodesic distance; broadcasts over leading axes."""
    x = check_point(space, x)
    y = check_point(space, y)
    if space.is_hyperbolic:
        # |x - y|^2 in the Lorentz form equals 4 sinh^2(d/2); unlike arccosh
        # of -<x, y> this keeps full relative accuracy for nearby points
        q = np.maximum(minkowski(x - y, x - y), 0.0)
        d = 2.0 * np.arcsinh(0.5 * np.sqrt(q))
    else:
        d = np.linalg.norm(x - y, axis=-1)
    return float(d) if np.ndim(d) == 0 else d


def radius_of(space, pts):
    """Distance from the base point for a stack of points (no validation)."""
    pts = np.asarray(pts, dtype=float)
    if space.is_hyperbolic:
        return np.arccosh(np.maximum(pts[..., 0], 1.0))
    return np.linalg.norm(pts, axis=-1)


def pairwise_distances(space, pts, others=None):
    """Dense matrix of distances between two stacks of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    others = pts if others is None else np.atleast_2d(np.asarray(others, dtype=float))
    if space.is_hyperbolic:
        g = pts[:, None, 0] * others[None, :, 0] - pts[:, 1:] @ others[:, 1:].T
        return np.arccosh(np.maximum(g, 1.0))
    sq = (
        np.sum(pts**2, axis=1)[:, None]
        + np.sum(others**2, axis=1)[None, :]
        - 2.0 * pts @ others.T
    )
    return np.sqrt(np.maximum(sq, 0.0))


def within(space, pts, others, radius):
    """Boolean matrix ``d(p, q) < radius`` without evaluating distances."""
    pts = np.atleast_2d(pts)
    others = np.atleast_2d(others)
    if space.is_hyperbolic:
        g = pts[:, None, 0] * others[None, :, 0] - pts[:, 1:] @ others[:, 1:].T
        return g < math.cosh(radius)
    sq = (
        np.sum(pts**2, axis=1)[:, None]
        + np.sum(others**2, axis=1)[None, :]
        - 2.0 * pts @ others.T
    )
    return sq < radius * radius


def _sphere_area(space, t):
    if space.is_hyperbolic:
        return space.omega * np.sinh(t) ** (space.n - 1)
    return space.omega * t ** (space.n - 1)


def sphere_area(space, t):
    """Area of the geodesic sphere of radius ``t`` (the polar volume density)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidInputError("radius must be non-negative")
    a = _sphere_area(space, t_arr)
    return float(a) if a.ndim == 0 else a


def ball_volume(space, R):
    """Volume of the geodesic ball of radius ``R``."""
    R = float(R)
    if R < 0 or not math.isfinite(R):
        raise InvalidInputError("radius must be finite and non-negative")
    if R == 0.0:
        return 0.0
    n = space.n
    if not space.is_hyperbolic:
        return space.omega * R**n / n
    if n == 2:
        return 2.0 * math.pi * 2.0 * math.sinh(R / 2.0) ** 2
    if n == 3:
        return math.pi * (math.sinh(2.0 * R) - 2.0 * R)
    panels = max(4, int(math.ceil(R / _PANEL)))
    return integrate(lambda t: _sphere_area(space, t), 0.0, R, panels=panels, order=12)


@lru_cache(maxsize=64)
def _radial_table(space, R):
    """Abscissae t_i and normalized (V(t_i)/V(R))**(1/n) for inverse-CDF sampling."""
    t = np.linspace(0.0, R, _TABLE_NODES)
    nodes, weights = gl_nodes(t, 8)
    inc = (weights * _sphere_area(space, nodes)).reshape(-1, 8).sum(axis=1)
    cum = np.r_[0.0, np.cumsum(inc)]
    s = (cum / cum[-1]) ** (1.0 / space.n)
    s[-1] = 1.0
    return t, s


def sample_radii(space, R, rng, size):
    """Radii with density proportional to the sphere area on [0, R]."""
    u = rng.random(size)
    if not space.is_hyperbolic:
        return R * u ** (1.0 / space.n)
    t, s = _radial_table(space, float(R))
    return np.interp(u ** (1.0 / space.n), s, t)


def point_at(space, radii, directions):
    """Points at the given distances from ``o`` along unit ``directions``."""
    radii = np.asarray(radii, dtype=float)
    if space.is_hyperbolic:
        return np.column_stack([np.cosh(radii), np.sinh(radii)[:, None] * directions])
    return radii[:, None] * directions


def sample_uniform_ball(space, R, rng, size=None):
    """Uniform point(s) in the ball ``B_R(o)``.

    Radii come from the inverse CDF of the ball volume; directions are
    normalized Gaussians.  With ``size=None`` a single point is returned.
    """
    if not R > 0:
        raise InvalidInputError("ball radius must be positive")
    k = 1 if size is None else int(size)
    dirs = rng.standard_normal((k, space.n))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0.0] = 1.0
    dirs /= norms[:, None]
    pts = point_at(space, sample_radii(space, R, rng, k), dirs)
    return pts[0] if size is None else pts
