import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import tmm_rt
from plateio.errors import DegenerateError, DomainError
from plateio.media import ConstantComplex
from plateio.stack import (Layer, LayerStack, ModalSolver, SMatrix, _fresnel, dispersion_function,
                           interface_fresnel, scattering_coefficients, slab_rt, star, vacuum_stack)
from plateio.units import NATURAL, SI
from plateio.waves import TE, TM, ModeIndex


def make_stack(eps, d, units=NATURAL):
    return LayerStack(ConstantComplex(eps[0]), tuple(Layer(ConstantComplex(e), x) for e, x in zip(eps[1:-1], d)),
                      ConstantComplex(eps[-1]), units)


class TestGeometry:
    def test_interfaces_are_centred(self):
        s = make_stack([1, 2, 3, 4, 1], [0.1, 0.2, 0.3])
        assert np.allclose(s.interfaces, [-0.3, -0.2, 0.0, 0.3])
        assert s.thickness == pytest.approx(0.6)

    def test_region_lookup(self):
        s = make_stack([1, 2, 3, 1], [0.2, 0.2])
        assert [s.region_of(z) for z in (-1, -0.2, -0.1, 0.0, 0.1, 0.2, 5)] == [0, 0, 1, 1, 2, 2, 3]
        assert s.contains(1, -0.2) and s.contains(0, -0.2) and not s.contains(3, 0.0)
        assert [s.region_name(j) for j in range(4)] == ["I", "II1", "II2", "III"]
        with pytest.raises(IndexError):
            s.bounds(4)

    def test_layer_validation(self):
        with pytest.raises(ValueError, match="thickness"):
            Layer(ConstantComplex(2.0), -1.0)

    def test_region_III_defaults_to_region_I(self):
        s = LayerStack(ConstantComplex(1.5))
        assert s.medium_III == s.medium_I and s.n_layers == 0


class TestFresnel:
    @pytest.mark.parametrize("n1,n2,theta", [(1.0, 1.5, 0.0), (1.0, 1.5, 0.7), (1.5, 1.0, 0.5), (1.33, 2.4, 1.2)])
    def test_textbook_angle_form(self, n1, n2, theta):
        # Snell-law form with cosines, E-field (TE) and H-field (TM) amplitudes
        c1 = math.cos(theta)
        c2 = cmath.sqrt(1 - (n1 / n2 * math.sin(theta)) ** 2)
        rs = (n1 * c1 - n2 * c2) / (n1 * c1 + n2 * c2)
        rp = (n2 * c1 - n1 * c2) / (n2 * c1 + n1 * c2)
        tp_h = 2 * n2 * c1 / (n2 * c1 + n1 * c2)
        lam = n1 * math.sin(theta)
        r_te, t_te = interface_fresnel(n1 ** 2, n2 ** 2, 1.0, lam, TE, c=1.0)
        r_tm, t_tm = interface_fresnel(n1 ** 2, n2 ** 2, 1.0, lam, TM, c=1.0)
        assert abs(r_te - rs) < 1e-14 and abs(t_te - (1 + rs)) < 1e-14
        assert abs(r_tm - rp) < 1e-14
        assert abs(t_tm - tp_h * n1 / n2) < 1e-14

    def test_equal_media_exact(self):
        assert interface_fresnel(2 + 1j, 2 + 1j, 1.0, 0.3, TM, c=1.0) == (0j, 1 + 0j)

    def test_brewster_angle(self):
        lam = math.sin(math.atan(1.5))
        r, _ = interface_fresnel(1.0, 2.25, 1.0, lam, TM, c=1.0)
        assert abs(r) < 1e-15

    def test_zero_denominator(self):
        with pytest.raises(DegenerateError):
            _fresnel(1.0, 1.0, 0j, 0j, 1.0, 1.0, TE)

    def test_bad_polarization(self):
        with pytest.raises(ValueError):
            interface_fresnel(1, 2, 1.0, 0.1, "TEM")


class TestSlab:
    def test_airy_formula(self, rng):
        for _ in range(30):
            e2 = complex(rng.uniform(1, 6), rng.uniform(0, 1))
            e1, e3 = rng.uniform(1, 2), rng.uniform(1, 3)
            d, lam = rng.uniform(0.05, 2), rng.uniform(0, 3)
            for pol in (TE, TM):
                r12, t12 = interface_fresnel(e1, e2, 1.0, lam, pol, c=1.0)
                r23, t23 = interface_fresnel(e2, e3, 1.0, lam, pol, c=1.0)
                h2 = cmath.sqrt(e2 - lam * lam)
                ph = cmath.exp(1j * h2 * d)
                den = 1 + r12 * r23 * ph * ph
                r_ref, t_ref = (r12 + r23 * ph * ph) / den, t12 * t23 * ph / den
                r, t = slab_rt(make_stack([e1, e2, e3], [d]), ModeIndex(1.0, lam, polarization=pol))
                assert abs(r - r_ref) < 1e-12 * max(1, abs(r_ref))
                assert abs(t - t_ref) < 1e-12 * max(1, abs(t_ref))

    @pytest.mark.parametrize("pol", [TE, TM])
    def test_multilayer_against_characteristic_matrices(self, rng, pol):
        for _ in range(15):
            n = rng.integers(1, 5)
            eps = [rng.uniform(1, 2)] + [complex(rng.uniform(-3, 6), rng.uniform(0.01, 2)) for _ in range(n)] \
                + [rng.uniform(1, 3)]
            d = list(rng.uniform(0.05, 0.8, n))
            lam = rng.uniform(0, 4)
            r, t = slab_rt(make_stack(eps, d), ModeIndex(1.0, lam, polarization=pol))
            r_ref, t_ref = tmm_rt(eps, d, 1.0, lam, pol)
            assert abs(r - r_ref) < 1e-10 * max(1, abs(r_ref))
            assert abs(t - t_ref) < 1e-10 * max(1, abs(t_ref))

    def test_thick_evanescent_stack_stays_finite(self):
        s = make_stack([1, 2.25, 1], [200.0])
        r, t = slab_rt(s, ModeIndex(1.0, 3.0, polarization=TE))
        assert np.isfinite(r) and abs(t) < 1e-200

    def test_empty_stack(self):
        for pol in (TE, TM):
            assert slab_rt(vacuum_stack(), ModeIndex(1e15, 1e6, polarization=pol)) == (0, 1)


@st.composite
def lossless_stack(draw):
    n = draw(st.integers(0, 4))
    ext = draw(st.floats(1.0, 2.0))
    eps = [ext] + [draw(st.floats(1.0, 9.0)) for _ in range(n)] + [ext]
    d = [draw(st.floats(0.01, 3.0)) for _ in range(n)]
    frac = draw(st.floats(0.0, 0.999))
    return make_stack(eps, d), frac * math.sqrt(ext)


@settings(max_examples=60, deadline=None)
@given(lossless_stack(), st.sampled_from([TE, TM]))
def test_lossless_unitarity_and_reciprocity(case, pol):
    s, lam = case
    sol = ModalSolver(s, 1.0, np.array([lam]), pol)
    r, t, r_rev, t_rev = (x[0] for x in sol.rt())
    assert abs(abs(r) ** 2 + abs(t) ** 2 - 1) < 1e-10
    assert abs(abs(r_rev) ** 2 + abs(t_rev) ** 2 - 1) < 1e-10
    assert abs(t - t_rev) < 1e-10


def test_reciprocity_unequal_exteriors(lossy_two_layer):
    sol = ModalSolver(lossy_two_layer, 2.0, np.array([0.3, 1.2, 2.5]), TM)
    _, t, _, t_rev = sol.rt()
    assert np.allclose(t / sol.h[0], t_rev / sol.h[-1], rtol=1e-12)


def test_structural_zeros(lossy_two_layer):
    sol = ModalSolver(lossy_two_layer, 2.0, np.array([0.7]), TE)
    last = sol.last
    for f in range(last + 1):
        for s in range(last + 1):
            A, B, C, D = sol.reduced(f, s)
            if f == 0:
                assert A == 0 and B == 0
            if f == last:
                assert C == 0 and D == 0
            if s == 0:
                assert B == 0 and D == 0
            if s == last:
                assert A == 0 and C == 0
    with pytest.raises(IndexError):
        sol.reduced(0, last + 1)


@pytest.mark.parametrize("pol", [TE, TM])
def test_interface_continuity(lossy_two_layer, pol):
    sol = ModalSolver(lossy_two_layer, 2.0, np.linspace(0, 4, 41), pol)
    assert np.max(sol.continuity_residual()) < 1e-13


def test_absolute_phase_convention(lossy_two_layer):
    mode = ModeIndex(2.0, 0.7, polarization=TE)
    c = scattering_coefficients(lossy_two_layer, mode, 0, 0)
    r, _ = slab_rt(lossy_two_layer, mode)
    z0 = lossy_two_layer.interfaces[0]
    h0 = cmath.sqrt(4 - 0.49)
    # region-I reflected wave C e^{-ih z} e^{-ih z'} equals r e^{ih(z0 - z)} e^{ih(z0 - z')}
    assert abs(c.C - r * cmath.exp(2j * h0 * z0)) < 1e-13
    assert c.A == 0 and c.polarization == TE


def test_merge_invariance():
    a = make_stack([1, 2 + 0.3j, 2 + 0.3j, 3, 1.2], [0.2, 0.15, 0.4])
    b = a.merged()
    assert b.n_layers == 2
    for pol in (TE, TM):
        sa = ModalSolver(a, 1.0, np.linspace(0, 3, 31), pol)
        sb = ModalSolver(b, 1.0, np.linspace(0, 3, 31), pol)
        for x, y in zip(sa.rt(), sb.rt()):
            assert np.max(np.abs(x - y)) < 1e-12


def test_star_product_associative(rng):
    def rand():
        return SMatrix(*(rng.normal(size=4) + 1j * rng.normal(size=4)) * 0.4)
    a, b, c = rand(), rand(), rand()
    left, right = star(star(a, b), c), star(a, star(b, c))
    assert all(np.allclose(x, y, rtol=1e-13) for x, y in zip(left, right))
    ident = SMatrix.identity(4)
    assert all(np.allclose(x, y) for x, y in zip(star(ident, a), a))


class TestDispersion:
    def test_half_space_tm_form(self):
        s = make_stack([1.0, -2 + 0.1j], [])
        lam = np.array([1.3 + 0.1j, 2.0 + 0.0j])
        D = dispersion_function(s, 1.0, lam, TM)
        h0, h1 = np.sqrt(1 - lam ** 2), np.sqrt(-2 + 0.1j - lam ** 2)
        h0 = np.where(h0.imag < 0, -h0, h0)
        h1 = np.where(h1.imag < 0, -h1, h1)
        ratio = D / ((-2 + 0.1j) * h0 + h1)
        assert np.allclose(ratio, ratio[0], rtol=1e-12)

    def test_surface_plasmon_zero(self):
        eps = -2 + 0.01j
        s = make_stack([1.0, eps], [])
        lam = cmath.sqrt(eps / (eps + 1))
        assert abs(dispersion_function(s, 1.0, lam, TM)) < 1e-12

    def test_guided_mode_zero_of_symmetric_slab(self):
        s = make_stack([1, 2.25, 1], [3.0])
        # TE fundamental mode from the even-mode condition tan(kx d/2) = g/kx
        from scipy.optimize import brentq
        f = lambda b: math.tan(math.sqrt(2.25 - b * b) * 1.5) - math.sqrt(b * b - 1) / math.sqrt(2.25 - b * b)  # noqa: E731
        beta = brentq(f, 1.1, 1.4)
        assert abs(dispersion_function(s, 1.0, beta, TE)) < 1e-9


def test_solver_rejects_bad_frequency(lossy_two_layer):
    with pytest.raises(DomainError):
        ModalSolver(lossy_two_layer, 0.0, np.array([0.1]), TE)


def test_si_units_are_consistent():
    k0 = 2e15 / SI.c
    s = make_stack([1.0, 2.25 + 0.1j, 1.0], [0.5 / k0], SI)
    n = make_stack([1.0, 2.25 + 0.1j, 1.0], [0.5], NATURAL)
    a = slab_rt(s, ModeIndex(2e15, 0.4 * k0, polarization=TM))
    b = slab_rt(n, ModeIndex(1.0, 0.4, polarization=TM))
    assert np.allclose(a, b, rtol=1e-12)
