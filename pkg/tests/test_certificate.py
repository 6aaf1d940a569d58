import json
import math

import numpy as np
import pytest

from hypack.certificate import Certificate, bound, default_grid, evaluate, sign_abscissae, verify
from hypack.errors import ContractViolationError, InvalidInputError
from hypack.geometry import Space, ball_volume
from hypack.serialization import dumps
from hypack.spherical import RadialProfile, SpectralGrid, volume_integral

E1 = Space.euclidean(1)


def natural_spline(x, y, q):
    """Textbook natural cubic spline (tridiagonal second-derivative solve)."""
    n = len(x) - 1
    h = np.diff(x)
    A = np.zeros((n + 1, n + 1))
    rhs = np.zeros(n + 1)
    A[0, 0] = A[n, n] = 1.0
    for i in range(1, n):
        A[i, i - 1], A[i, i], A[i, i + 1] = h[i - 1], 2 * (h[i - 1] + h[i]), h[i]
        rhs[i] = 6 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1])
    M = np.linalg.solve(A, rhs)
    out = []
    for t in q:
        i = min(max(np.searchsorted(x, t) - 1, 0), n - 1)
        a, b = x[i + 1] - t, t - x[i]
        out.append(
            M[i] * a**3 / (6 * h[i]) + M[i + 1] * b**3 / (6 * h[i])
            + (y[i] / h[i] - M[i] * h[i] / 6) * a + (y[i + 1] / h[i] - M[i + 1] * h[i] / 6) * b
        )
    return np.array(out)


def triangle(r, c=1.0):
    """c * (1 - t / 2r) on [0, 2r]: the Fejer certificate on the line."""
    return Certificate(E1, r, RadialProfile([0.0, r, 2 * r], [c, c / 2, 0.0], E1))


class TestConstruction:
    def test_support_must_cover_2r(self):
        prof = RadialProfile([0.0, 0.5], [1.0, 0.0])
        with pytest.raises(InvalidInputError):
            Certificate(E1, 0.5, prof)
        with pytest.raises(InvalidInputError):
            Certificate(E1, 0.0, prof)

    def test_euclidean_grid_has_no_complementary_series(self):
        prof = RadialProfile([0.0, 1.0], [1.0, 0.0])
        with pytest.raises(InvalidInputError):
            Certificate(E1, 0.5, prof, SpectralGrid([0.0, 1.0], [0.1]))

    def test_default_grid(self):
        g = default_grid(Space.hyperbolic(2), 4.0)
        assert g.lmax == pytest.approx(10.0) and g.complementary.size == 50


class TestEvaluate:
    def test_matches_hand_spline(self, rng):
        x = np.linspace(0.0, 3.0, 13)
        y = np.cos(x) - 0.2 * x + rng.normal(scale=0.05, size=13)
        cert = Certificate(Space.hyperbolic(2), 1.0, RadialProfile(x, y))
        q = rng.uniform(0, 3, 200)
        assert np.max(np.abs(evaluate(cert, q) - natural_spline(x, y, q))) < 1e-12

    def test_zero_outside_support(self):
        cert = triangle(0.5)
        assert np.all(evaluate(cert, [1.0, 1.5, 100.0]) == 0.0)
        assert evaluate(cert, 0.0) == 1.0

    def test_sign_points_include_knots(self):
        cert = triangle(0.5)
        pts = sign_abscissae(cert)
        assert pts[0] == 1.0 and pts[-1] == 1.0


class TestVerify:
    def test_triangle_is_admissible_with_bound_one(self):
        cert = triangle(0.5)
        rep = verify(cert)
        assert rep.admissible
        assert rep.at_one == pytest.approx(1.0, abs=1e-12)
        assert rep.sign_margin == pytest.approx(0.0, abs=1e-15)
        assert rep.spectral_margin >= -1e-12
        assert bound(cert, rep).value == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_fails_sign_condition(self):
        prof = RadialProfile.from_function(lambda t: np.exp(-t * t), 3.0, 61, E1)
        rep = verify(Certificate(E1, 0.5, prof))
        assert not rep.admissible
        assert rep.sign_margin == pytest.approx(math.exp(-1.0), rel=1e-6)
        assert rep.sign_argmax == pytest.approx(1.0)

    def test_negated_triangle_fails(self):
        rep = verify(triangle(0.5, c=-1.0))
        assert not rep.admissible
        assert rep.at_one < 0

    def test_box_fails_spectral_condition(self):
        # f = 1 on [0, 1 - eps], dropping to zero: fhat ~ 2 sin(lam)/lam changes sign
        prof = RadialProfile([0.0, 0.45, 0.9, 0.95, 1.0], [1, 1, 1, 0.5, 0.0], E1)
        rep = verify(Certificate(E1, 0.5, prof))
        assert not rep.admissible
        assert rep.spectral_margin < -0.1
        assert rep.spectral_argmin[0] == "principal"

    def test_bound_refuses_non_admissible(self):
        cert = triangle(0.5, c=-1.0)
        with pytest.raises(ContractViolationError):
            bound(cert, verify(cert))

    def test_bad_arguments(self):
        with pytest.raises(InvalidInputError):
            verify(triangle(0.5), refinement=0)
        with pytest.raises(InvalidInputError):
            verify(triangle(0.5), required="complementary")

    def test_refinement_is_monotone(self):
        prof = RadialProfile([0.0, 0.45, 0.9, 0.95, 1.0], [1, 1, 1, 0.5, 0.0], E1)
        cert = Certificate(E1, 0.5, prof)
        mins = [verify(cert, refinement=k).table.principal_values.min() for k in (1, 2, 4, 8)]
        assert all(b <= a for a, b in zip(mins, mins[1:]))

    def test_report_dict(self):
        d = verify(triangle(0.5)).to_dict()
        assert d["admissible"] is True
        assert set(d["spectral_argmin"]) == {"series", "parameter"}
        assert "not an interval" in d["note"]


class TestInvariance:
    @pytest.mark.parametrize("c", [0.01, 0.7, 3.0, 250.0])
    def test_positive_scaling(self, c):
        cert = triangle(0.5)
        b1 = bound(cert, verify(cert)).value
        scaled = cert.scaled(c)
        assert bound(scaled, verify(scaled)).value == pytest.approx(b1, rel=1e-12)

    @pytest.mark.parametrize("c", [1e-3, 3.0, 1e3])
    def test_verdict_does_not_depend_on_scale(self, opt_e1, c):
        cert = opt_e1[0].certificate
        rep = verify(cert.scaled(c))
        assert rep.admissible
        assert rep.grids["spectral_scale"] == pytest.approx(c * opt_e1[0].report.at_one, rel=1e-12)

    @pytest.mark.parametrize("r", [0.05, 0.5, 3.0])
    def test_rescaled_line(self, r):
        cert = triangle(r)
        assert bound(cert, verify(cert)).value == pytest.approx(1.0, abs=1e-10)

    def test_rescaled_plane_certificate(self, opt_e2):
        res, _ = opt_e2
        cert = res.certificate
        s = 1.7
        prof = RadialProfile(cert.profile.t * s, cert.profile.f, cert.space, cert.profile.bc_origin)
        g = cert.spectral_grid
        moved = Certificate(cert.space, cert.r * s, prof, SpectralGrid(g.principal / s))
        rep = verify(moved)
        assert rep.admissible
        assert bound(moved, rep).value == pytest.approx(res.bound.value, rel=1e-8)

    def test_bound_components(self, opt_h2):
        res, _ = opt_h2
        cert = res.certificate
        rep = verify(cert)
        b = bound(cert, rep)
        assert b.at_one == pytest.approx(volume_integral(cert.space, cert.profile), rel=1e-10)
        assert b.value == pytest.approx(ball_volume(cert.space, cert.r) * b.f0 / b.at_one, rel=1e-15)

    def test_json_round_trip(self, opt_h2):
        res, _ = opt_h2
        cert = res.certificate
        back = Certificate.from_dict(json.loads(dumps(cert.to_dict())))
        assert np.array_equal(back.profile.f, cert.profile.f)
        assert np.array_equal(back.spectral_grid.principal, cert.spectral_grid.principal)
        r1, r2 = verify(cert), verify(back)
        assert r1.spectral_margin == r2.spectral_margin
        assert bound(back, r2).value == bound(cert, r1).value

    def test_unknown_format(self):
        d = triangle(0.5).to_dict()
        d["format"] = "cert/9"
        with pytest.raises(InvalidInputError):
            Certificate.from_dict(d)
