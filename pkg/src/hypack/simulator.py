"""Hard-sphere point processes in a ball window, and their estimators.

Samples are Matern type II thinnings of a Poisson process: every proposal
gets a uniform mark and survives iff no other proposal within distance
``2r`` has a smaller mark.  The retained intensity is

    (1 - exp(-lam * v)) / v,    v = vol(B_{2r}),

for points whose exclusion ball lies inside the window, in either geometry.

The autocorrelation estimator uses the weight ``b = 1_{B_T(o)} / vol(B_T)``;
for radial test functions ``F`` the pair term ``F(sigma(x)^-1 sigma(y))``
depends only on ``d(x, y)``, so no section of ``G -> S`` is needed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, InvalidInputError, ResourceLimitError
from .geometry import Space, ball_volume, check_point, pairwise_distances, radius_of, sample_uniform_ball, within
from .spherical import volume_integral

FORMAT = "pack/1"
MATERN = "MaternII"
POISSON = "PoissonUnthinned"
PROPOSAL_CAP = 10**7
INTENSITY_SLACK = 0.10
_CHUNK = 2048


def make_rng(seed):
    """Random stream for one sample: numpy's PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(eq=False)
class PackingSample:
    space: Space
    r: float
    R: float
    points: np.ndarray
    seed: int
    process: str = MATERN
    intensity: float = float("nan")

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, self.space.ambient_dim)

    @property
    def window_radius(self):
        return self.R

    def __len__(self):
        return self.points.shape[0]

    def radii(self):
        return radius_of(self.space, self.points)

    def min_separation(self):
        """Smallest pairwise distance (``inf`` for fewer than two points)."""
        best = math.inf
        pts = self.points
        for i in range(0, len(pts), _CHUNK):
            D = pairwise_distances(self.space, pts[i:i + _CHUNK], pts)
            rows = np.arange(D.shape[0])
            D[rows, rows + i] = np.inf
            if D.size:
                best = min(best, float(D.min()))
        return best

    def to_dict(self):
        return {
            "format": FORMAT,
            "space": self.space.to_dict(),
            "r": self.r,
            "R": self.R,
            "seed": self.seed,
            "process": self.process,
            "lambda": self.intensity,
            "points": self.points.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format", FORMAT) != FORMAT:
            raise InvalidInputError(f"unsupported sample format {d.get('format')!r}")
        space = Space.from_dict(d["space"])
        pts = np.asarray(d["points"], dtype=float).reshape(-1, space.ambient_dim)
        if len(pts):
            check_point(space, pts)
        return cls(space, float(d["r"]), float(d["R"]), pts, int(d["seed"]),
                   d.get("process", MATERN), float(d.get("lambda", "nan")))


def _retained(space, pts, marks, r):
    """Matern II rule: keep a point unless a lower mark sits within 2r."""
    keep = np.ones(len(pts), dtype=bool)
    for i in range(0, len(pts), _CHUNK):
        close = within(space, pts[i:i + _CHUNK], pts, 2.0 * r)
        beaten = close & (marks[None, :] < marks[i:i + _CHUNK, None])
        keep[i:i + _CHUNK] = ~beaten.any(axis=1)
    return keep


def sample_matern(space, r, lam, R, seed, cap=PROPOSAL_CAP, process=MATERN):
    """One Matern II sample in ``B_R(o)`` (``process=PoissonUnthinned`` skips the thinning)."""
    if not (lam >= 0 and math.isfinite(lam)):
        raise InvalidInputError("proposal intensity must be finite and non-negative")
    if not R > 0:
        raise InvalidInputError("window radius must be positive")
    if process == MATERN and not r > 0:
        raise InvalidInputError("packing radius must be positive")
    if process not in (MATERN, POISSON):
        raise InvalidInputError(f"unknown process {process!r}")
    mean = lam * ball_volume(space, R)
    if mean > cap:
        raise ResourceLimitError(f"expected {mean:.3g} proposals exceeds the cap {cap:.3g}")
    rng = make_rng(seed)
    count = int(rng.poisson(mean))
    pts = sample_uniform_ball(space, R, rng, count)
    marks = rng.random(count)
    if process == MATERN and count > 1:
        pts = pts[_retained(space, pts, marks, r)]
    return PackingSample(space, float(r), float(R), pts, int(seed), process, float(lam))


def sample_many(space, r, lam, R, seeds, workers=None, **kw):
    """Samples for several seeds; each seed owns its stream, so order is irrelevant."""
    seeds = list(seeds)
    if workers is None or workers <= 1 or len(seeds) < 2:
        return [sample_matern(space, r, lam, R, s, **kw) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: sample_matern(space, r, lam, R, s, **kw), seeds))


def matern_intensity(space, r, lam):
    """Retention intensity of the Matern II process away from the window edge."""
    v = ball_volume(space, 2.0 * r)
    if lam == 0:
        return 0.0
    return -math.expm1(-lam * v) / v


def estimate_intensity(sample, R_obs):
    if not 0 < R_obs <= sample.R * (1 + 1e-12):
        raise InvalidInputError("observation radius must lie in (0, R]")
    k = int(np.count_nonzero(sample.radii() <= R_obs))
    return k / ball_volume(sample.space, R_obs)


@dataclass
class DensityEstimate:
    lower: float
    upper: float
    intensity_hat: float
    R_obs: float
    inner_count: int
    outer_count: int

    def to_dict(self):
        return dict(self.__dict__)


def estimate_density(sample, R_obs):
    """Window density with balls fully inside (lower) or merely touching (upper)."""
    if not 0 < R_obs <= (sample.R - sample.r) * (1 + 1e-12):
        raise InvalidInputError("observation radius must lie in (0, R - r]")
    rad = sample.radii()
    vol = ball_volume(sample.space, R_obs)
    ball = ball_volume(sample.space, sample.r)
    inner = int(np.count_nonzero(rad <= R_obs - sample.r))
    outer = int(np.count_nonzero(rad <= R_obs + sample.r))
    return DensityEstimate(
        inner * ball / vol, outer * ball / vol, estimate_intensity(sample, R_obs), float(R_obs), inner, outer
    )


@dataclass
class AutocorrelationEstimate:
    value: float
    T_window: float
    pair_count: int
    reduced: float
    intensity_hat: float
    at_one: float
    window_count: int

    def to_dict(self):
        return dict(self.__dict__)


def _pair_values(sample, F, T_window):
    """F(d(x, y)) for x in B_T(o), all y within the support; diagonal exact."""
    supp = F.support
    rad = sample.radii()
    inner = np.flatnonzero(rad <= T_window)
    pts = sample.points
    vals = []
    for i in range(0, inner.size, _CHUNK):
        block = inner[i:i + _CHUNK]
        D = pairwise_distances(sample.space, pts[block], pts)
        D[np.arange(block.size), block] = 0.0
        near = D <= supp
        vals.append(F(D[near]))
    vals = np.concatenate(vals) if vals else np.zeros(0)
    return vals, inner.size


def estimate_autocorrelation(sample, F, T_window, at_one=None):
    """Empirical autocorrelation of ``F`` with weight ``1_{B_T} / vol(B_T)``."""
    if not T_window > 0:
        raise InvalidInputError("window radius must be positive")
    if T_window + F.support > sample.R * (1 + 1e-12):
        raise InvalidInputError("T_window + support(F) exceeds the sample window")
    vals, k = _pair_values(sample, F, T_window)
    vol = ball_volume(sample.space, T_window)
    value = math.fsum(vals.tolist()) / vol
    if at_one is None:
        at_one = volume_integral(sample.space, F)
    i_hat = estimate_intensity(sample, sample.R)
    return AutocorrelationEstimate(
        value, float(T_window), int(vals.size), value - i_hat**2 * at_one, i_hat, float(at_one), k
    )


@dataclass
class AuditReport:
    lhs: float
    diagonal_bound: float
    diagonal_slack: float
    plancherel_floor: float
    intensity_hat: float
    intensity_bound: float
    slack: float
    passed_diagonal: bool
    passed_intensity: bool
    window_count: int

    def to_dict(self):
        d = dict(self.__dict__)
        d["note"] = (
            "positivity of the reduced autocorrelation gives lhs >= intensity^2 * fhat(1); "
            "with the diagonal step this yields intensity <= F(0) / fhat(1)"
        )
        return d


def audit_proof_chain(sample, cert, report, T_window, slack=INTENSITY_SLACK):
    """Check the per-sample diagonal inequality and the intensity bound.

    With b the normalized indicator of ``B_T(o)``, separation and condition
    (i) give ``sum_{x in B_T} sum_y F(d(x,y)) <= F(0) * #(P in B_T)``.  Each
    off-diagonal pair inside the support contributes at most the verified
    sign margin, which is added as the only allowance (plus rounding).
    """
    if not report.admissible:
        raise ContractViolationError("audit needs an admissible certificate")
    if cert.space != sample.space:
        raise InvalidInputError("certificate and sample live in different spaces")
    F = cert.profile
    if T_window + F.support > sample.R * (1 + 1e-12):
        raise InvalidInputError("T_window + support(F) exceeds the sample window")
    vals, k = _pair_values(sample, F, T_window)
    vol = ball_volume(sample.space, T_window)
    f0 = float(F(0.0))
    lhs = math.fsum(vals.tolist()) / vol
    diag = f0 * k / vol
    off = vals.size - k
    allowance = (off * max(report.sign_margin, 0.0) + 1e-12 * math.fsum(np.abs(vals).tolist())) / vol
    i_hat = k / vol
    i_bound = f0 / report.at_one
    return AuditReport(
        lhs,
        diag,
        allowance,
        i_hat**2 * report.at_one,
        i_hat,
        i_bound,
        float(slack),
        bool(lhs <= diag + allowance),
        bool(i_hat <= i_bound * (1.0 + slack)),
        k,
    )


def distance_histogram(sample, bins=50, rmax=None):
    """Ordered-pair distance counts, rows ``(bin_left, bin_right, count)``."""
    pts = sample.points
    if rmax is None:
        rmax = 2.0 * sample.R
    edges = np.linspace(0.0, rmax, int(bins) + 1)
    counts = np.zeros(int(bins), dtype=np.int64)
    for i in range(0, len(pts), _CHUNK):
        D = pairwise_distances(sample.space, pts[i:i + _CHUNK], pts)
        rows = np.arange(D.shape[0])
        mask = np.ones(D.shape, dtype=bool)
        mask[rows, rows + i] = False
        counts += np.histogram(D[mask], edges)[0]
    return [(float(a), float(b), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]


def histogram_csv(rows):
    lines = ["bin_left,bin_right,ordered_pair_count"]
    lines += [f"{a:.17g},{b:.17g},{c}" for a, b, c in rows]
    return "\n".join(lines) + "\n"
