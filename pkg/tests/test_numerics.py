import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from plateio.errors import DomainError, NonConvergence
from plateio.numerics import (ASYMPTOTIC_MIN, SERIES_MAX, QuadratureSpec, axial_wavenumber,
                              bessel_j, bessel_j_orders, find_root_complex, integrate_spectral,
                              winding_number, wavenumber)


def envelope(n, x):
    return math.hypot(special.jv(n, x), special.jvp(n, x))


class TestBessel:
    @pytest.mark.parametrize("n", [0, 1, 2, 5, 11])
    def test_against_scipy_over_all_regimes(self, n):
        x = np.concatenate([np.linspace(0, 3, 61), np.linspace(3, 60, 400), [100.0, 250.0, 400.0]])
        j, dj = bessel_j(n, x)
        env = np.hypot(special.jv(n, x), special.jvp(n, x)) + 1e-300
        assert np.max(np.abs(j - special.jv(n, x)) / np.maximum(env, 1e-3)) < 1e-13
        assert np.max(np.abs(dj - special.jvp(n, x)) / np.maximum(env, 1e-3)) < 1e-13

    @pytest.mark.parametrize("n,x", [(0, 0.5), (1, 1.999), (3, 2.0), (2, 24.99), (0, 25.0), (4, 30.0), (7, 7.0)])
    def test_against_mpmath(self, n, x):
        j, dj = bessel_j(n, x)
        with mpmath.workdps(30):
            ref = float(mpmath.besselj(n, x))
            dref = float(mpmath.besselj(n, x, derivative=1))
        assert abs(j - ref) <= 2e-15 * max(envelope(n, x), 1e-3)
        assert abs(dj - dref) <= 2e-15 * max(envelope(n, x), 1e-3) * 10

    def test_values_at_origin(self):
        assert bessel_j(0, 0.0) == (1.0, 0.0)
        assert bessel_j(1, 0.0) == (0.0, 0.5)
        assert bessel_j(3, 0.0) == (0.0, 0.0)

    def test_continuity_across_route_switches(self):
        for n in (0, 1, 3):
            for edge in (SERIES_MAX, max(ASYMPTOTIC_MIN, (n + 1) ** 2)):
                lo, hi = bessel_j(n, np.nextafter(edge, 0)), bessel_j(n, edge)
                assert abs(lo[0] - hi[0]) < 1e-14 and abs(lo[1] - hi[1]) < 1e-14

    def test_all_orders_match_single_order(self):
        x = np.array([0.3, 1.7, 5.0, 17.5, 60.0])
        J, dJ = bessel_j_orders(12, x)
        for n in range(13):
            j, dj = bessel_j(n, x)
            assert np.allclose(J[n], j, rtol=0, atol=2e-14)
            assert np.allclose(dJ[n], dj, rtol=0, atol=2e-14)

    def test_recurrence_identity(self):
        x = np.linspace(0.1, 40, 200)
        J, _ = bessel_j_orders(8, x)
        for n in range(1, 8):
            assert np.max(np.abs(J[n - 1] + J[n + 1] - 2 * n / x * J[n])) < 1e-13

    @pytest.mark.parametrize("n,x", [(-1, 1.0), (0, -0.5), (0, np.inf)])
    def test_domain_errors(self, n, x):
        with pytest.raises(DomainError):
            bessel_j(n, x)


class TestBranches:
    @given(st.floats(0.1, 10), st.floats(0, 5), st.floats(0, 20))
    def test_axial_wavenumber_branch(self, re_eps, im_eps, lam):
        h = axial_wavenumber(complex(re_eps, im_eps), 1.0, lam, c=1.0)
        assert h.imag >= 0
        if h.imag == 0:
            assert h.real >= 0
        assert abs(h * h - (complex(re_eps, im_eps) - lam * lam)) < 1e-9 * (1 + lam * lam)

    def test_evanescent_is_positive_imaginary(self):
        h = axial_wavenumber(1.0, 1.0, 2.0, c=1.0)
        assert h == pytest.approx(1j * math.sqrt(3.0))

    def test_wavenumber(self):
        k = wavenumber(-2 + 0.01j, 3.0, 1.0)
        assert k.imag > 0 and abs(k * k - 9 * (-2 + 0.01j)) < 1e-12

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(DomainError):
            axial_wavenumber(1.0, 0.0, 0.1)


class TestQuadrature:
    def test_exponential(self):
        v, err = integrate_spectral(lambda x: np.exp(-x), QuadratureSpec(rel_tol=1e-12, lambda_max=60.0))
        assert abs(v - (1 - math.exp(-60))) < 1e-13 and err < 1e-10

    def test_vector_valued_against_scipy(self):
        def f(x):
            return np.stack([np.cos(3 * x) * np.exp(-x), special.j0(x) * np.exp(-0.1 * x)], axis=-1)
        v, _ = integrate_spectral(f, QuadratureSpec(rel_tol=1e-12, lambda_max=400.0))
        ref0 = integrate.quad(lambda x: np.cos(3 * x) * np.exp(-x), 0, 400, limit=500)[0]
        assert abs(v[0] - ref0) < 1e-12
        assert abs(v[1] - 1 / math.sqrt(1.01)) < 1e-10

    @pytest.mark.filterwarnings("ignore:spectral tail")
    def test_inverse_square_root_breakpoint(self):
        # int_0^2 |1 - x|^{-1/2} dx = 4
        spec = QuadratureSpec(rel_tol=1e-10, lambda_max=2.0)
        v, _ = integrate_spectral(lambda x: 1 / np.sqrt(np.abs(1 - x)), spec, breakpoints=[1.0])
        assert abs(v - 4.0) < 1e-9

    def test_sommerfeld_branch_integrand(self):
        # int_0^inf lam J0(lam rho) e^{i h z}/h dlam = e^{i k R}/(-i R), R = sqrt(rho^2 + z^2)
        k, rho, z = 1.0 + 0.01j, 0.8, 0.5
        def f(lam):
            h = axial_wavenumber(k * k, 1.0, lam, c=1.0)
            return lam * special.j0(lam * rho) * np.exp(1j * h * z) / h
        v, _ = integrate_spectral(f, QuadratureSpec(rel_tol=1e-11, lambda_max=120.0), [abs(k), k.real])
        R = math.hypot(rho, z)
        assert abs(v - np.exp(1j * k * R) / (1j * R)) < 1e-9

    def test_full_output_and_tail_warning(self):
        with pytest.warns(RuntimeWarning, match="tail"):
            v, err, info = integrate_spectral(lambda x: 1 / (1 + x * x),
                                              QuadratureSpec(lambda_max=10.0), full_output=True)
        assert info["tail"] > 0.01 and err >= info["tail"]

    def test_budget_exhaustion(self):
        spec = QuadratureSpec(rel_tol=1e-14, lambda_max=1000.0, max_subdivisions=4)
        with pytest.raises(NonConvergence) as exc:
            integrate_spectral(lambda x: np.sin(x * x), spec)
        assert exc.value.estimate is not None and exc.value.error > 0

    def test_unresolved_lambda_max(self):
        with pytest.raises(ValueError):
            integrate_spectral(np.exp, QuadratureSpec())
        assert QuadratureSpec().resolved(2.0).lambda_max == 40.0

    @pytest.mark.parametrize("kw", [{"rel_tol": 0}, {"abs_tol": -1}, {"max_subdivisions": 0},
                                    {"lambda_max": -1.0}])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            QuadratureSpec(**kw)


class TestRoots:
    def test_newton(self):
        assert abs(find_root_complex(lambda z: z * z + 1, 0.3 + 0.8j) - 1j) < 1e-12

    def test_newton_failure_carries_estimate(self):
        with pytest.raises(NonConvergence) as exc:
            find_root_complex(lambda z: np.exp(z), 0.0, max_iter=5)
        assert exc.value.estimate is not None

    @pytest.mark.parametrize("box,count", [((-2, 2, -2, 2), 3), ((0.5, 2, -0.5, 0.5), 1), ((-3, -2, -1, 1), 0)])
    def test_winding_number(self, box, count):
        f = lambda z: (z - 1) * (z + 1j) * (z - 0.2 + 0.3j)  # noqa: E731
        assert winding_number(f, *box) == count

    def test_winding_counts_poles_negatively(self):
        assert winding_number(lambda z: 1 / (z - 0.1), -1, 1, -1, 1) == -1
