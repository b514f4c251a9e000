"""Planar layer stacks and their per-mode scattering amplitudes.

Geometry
--------
Regions are indexed ``0 .. N+1``: ``0`` is region I (``z < -L/2``),
``1 .. N`` are the layers of the plate and ``N+1`` is region III
(``z > L/2``).  Interfaces sit at ``z_0 = -L/2 < z_1 < ... < z_N = L/2``;
interface ``m`` separates region ``m`` (below) from region ``m+1``.

Amplitude conventions
---------------------
In every region the field of one polarization is ``a exp(i h z) + b exp(-i h z)``
times the M (TE) or N (TM) wave pattern; TE amplitudes multiply M, TM
amplitudes multiply N, so the TM tangential electric field is
``(h/k)(a e^{ihz} - b e^{-ihz})`` and both tangential E and H are
continuous.  Interface coefficients follow from those two conditions.

Scattering amplitudes ``A, B, C, D`` for a (field region f, source region s)
pair multiply, respectively::

    A: e^{+i h_f z} e^{-i h_s z'}      B: e^{+i h_f z} e^{+i h_s z'}
    C: e^{-i h_f z} e^{-i h_s z'}      D: e^{-i h_f z} e^{+i h_s z'}

with absolute ``z``.  Region I only carries down-going scattered waves and
region III only up-going ones, so ``A = B = 0`` for ``f = 0``,
``C = D = 0`` for ``f = N+1``, ``B = D = 0`` for ``s = 0`` and
``A = C = 0`` for ``s = N+1``.

Internally every wave is referenced to the boundary it leaves from (up-going
waves to the bottom of their region, down-going to the top) so all
exponentials have modulus <= 1; composition uses Redheffer star products.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError, DomainError
from .media import ConstantComplex, permittivity
from .numerics import axial_wavenumber
from .units import SI
from .waves import TE, TM


@dataclass(frozen=True)
class Layer:
    medium: object
    thickness: float

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer thickness must be > 0, got {self.thickness}")


@dataclass(frozen=True)
class LayerStack:
    medium_I: object
    layers: tuple = field(default_factory=tuple)
    medium_III: object = None
    units: object = SI

    def __post_init__(self):
        layers = tuple(l if isinstance(l, Layer) else Layer(*l) for l in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.medium_III is None:
            object.__setattr__(self, "medium_III", self.medium_I)

    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def thickness(self):
        return float(sum(l.thickness for l in self.layers))

    @property
    def interfaces(self):
        """Interface positions ``z_0 .. z_N``."""
        z = [-0.5 * self.thickness]
        for layer in self.layers:
            z.append(z[-1] + layer.thickness)
        z[-1] = 0.5 * self.thickness
        return np.array(z)

    @property
    def media(self):
        return (self.medium_I,) + tuple(l.medium for l in self.layers) + (self.medium_III,)

    def bounds(self, j):
        """Closed z-interval of region ``j``."""
        z = self.interfaces
        last = self.n_layers + 1
        if j == 0:
            return -np.inf, z[0]
        if j == last:
            return z[-1], np.inf
        if 0 < j < last:
            return z[j - 1], z[j]
        raise IndexError(f"region index {j} out of range 0..{last}")

    def contains(self, j, z):
        lo, hi = self.bounds(j)
        return lo <= z <= hi

    def region_of(self, z):
        """Region index of ``z``; interface points go to the lower region."""
        zi = self.interfaces
        for j, top in enumerate(zi):
            if z <= top:
                return j
        return self.n_layers + 1

    def region_name(self, j):
        last = self.n_layers + 1
        if j == 0:
            return "I"
        if j == last:
            return "III"
        return f"II{j}"

    def eps(self, omega):
        return np.array([permittivity(m, omega) for m in self.media], dtype=complex)

    def wavenumbers(self, omega):
        return np.sqrt(self.eps(omega)) * (omega / self.units.c)

    def merged(self):
        """Equivalent stack with adjacent identical layers fused."""
        out = []
        for layer in self.layers:
            if out and out[-1].medium == layer.medium:
                out[-1] = Layer(layer.medium, out[-1].thickness + layer.thickness)
            else:
                out.append(layer)
        return LayerStack(self.medium_I, tuple(out), self.medium_III, self.units)


def vacuum_stack(units=SI):
    return LayerStack(ConstantComplex(1.0), (), ConstantComplex(1.0), units)


# ---------------------------------------------------------------------------
# Interfaces and S-matrices
# ---------------------------------------------------------------------------

def _check_pol(pol):
    if pol not in (TE, TM):
        raise ValueError(f"polarization must be 'TE' or 'TM', got {pol!r}")


def _fresnel(eps_a, eps_b, h_a, h_b, k_a, k_b, pol):
    if pol == TE:
        den = h_a + h_b
        if np.any(den == 0):
            raise DegenerateError("TE Fresnel denominator h_a + h_b vanishes")
        return (h_a - h_b) / den, 2.0 * h_a / den
    den = eps_b * h_a + eps_a * h_b
    if np.any(den == 0):
        raise DegenerateError("TM Fresnel denominator eps_b h_a + eps_a h_b vanishes")
    r = (eps_b * h_a - eps_a * h_b) / den
    return r, (k_a / k_b) * 2.0 * eps_b * h_a / den


def interface_fresnel(eps_a, eps_b, omega, lam, pol, c=SI.c):
    """Reflection and transmission at a single interface, incidence from ``a``.

    TE: ``r = (h_a - h_b)/(h_a + h_b)``, ``t = 2 h_a/(h_a + h_b)``.
    TM (N-wave amplitudes): ``r = (eps_b h_a - eps_a h_b)/(eps_b h_a + eps_a h_b)``,
    ``t = (k_a/k_b)(1 + r)``, which is the amplitude that makes the tangential
    electric field ``(h/k)(1 - r) = (h_b/k_b) t`` continuous.
    """
    _check_pol(pol)
    eps_a, eps_b = complex(eps_a), complex(eps_b)
    lam_arr = np.asarray(lam, dtype=complex)
    if eps_a == eps_b:
        r = np.zeros(lam_arr.shape, dtype=complex)
        t = np.ones(lam_arr.shape, dtype=complex)
    else:
        h_a = axial_wavenumber(eps_a, omega, lam_arr, c)
        h_b = axial_wavenumber(eps_b, omega, lam_arr, c)
        k_a = np.sqrt(eps_a) * omega / c
        k_b = np.sqrt(eps_b) * omega / c
        r, t = _fresnel(eps_a, eps_b, h_a, h_b, k_a, k_b, pol)
    if np.ndim(r) == 0:
        return complex(r), complex(t)
    return r, t


class SMatrix(NamedTuple):
    """Scattering matrix of a slab between a bottom and a top reference plane.

    ``r11``: up-going in, down-going out at the bottom; ``t21``: bottom to top;
    ``r22``: down-going in, up-going out at the top; ``t12``: top to bottom.
    """

    r11: np.ndarray
    t21: np.ndarray
    r22: np.ndarray
    t12: np.ndarray

    @classmethod
    def identity(cls, shape=()):
        z = np.zeros(shape, dtype=complex)
        o = np.ones(shape, dtype=complex)
        return cls(z, o, z.copy(), o.copy())


def star(lower, upper):
    """Redheffer star product: ``lower`` below ``upper``."""
    denom = 1.0 - lower.r22 * upper.r11
    if np.any(denom == 0):
        raise DegenerateError("singular star product (resonance exactly on the real axis)")
    inv = 1.0 / denom
    return SMatrix(
        r11=lower.r11 + lower.t12 * upper.r11 * lower.t21 * inv,
        t21=upper.t21 * lower.t21 * inv,
        r22=upper.r22 + upper.t21 * lower.r22 * upper.t12 * inv,
        t12=lower.t12 * upper.t12 * inv,
    )


# ---------------------------------------------------------------------------
# Per-mode solution for one (omega, polarization) and an array of lam
# ---------------------------------------------------------------------------

class ModalSolver:
    """Generalised reflection/transmission data of a stack for a batch of ``lam``.

    The object is immutable after construction and cheap to query for any
    (field, source) region pair.
    """

    def __init__(self, stack, omega, lam, pol):
        _check_pol(pol)
        if not omega > 0:
            raise DomainError("omega must be positive")
        self.stack = stack
        self.omega = float(omega)
        self.pol = pol
        self.lam = np.asarray(lam, dtype=complex if np.iscomplexobj(lam) else float)
        c = stack.units.c
        n = stack.n_layers
        self.last = n + 1
        self.eps = stack.eps(omega)
        self.k = np.sqrt(self.eps) * (omega / c)
        self.h = np.array([axial_wavenumber(e, omega, self.lam, c) for e in self.eps])
        self.h = self.h.reshape((n + 2,) + self.lam.shape)
        d = np.array([0.0] + [l.thickness for l in stack.layers] + [0.0])
        shape = (n + 2,) + tuple(1 for _ in self.lam.shape)
        self.e = np.exp(1j * self.h * d.reshape(shape))
        self.z = stack.interfaces

        # interface coefficients, m = 0..N between regions m and m+1
        r_up, t_up, r_dn, t_dn = [], [], [], []
        for m in range(n + 1):
            if self.eps[m] == self.eps[m + 1]:
                zero = np.zeros(self.lam.shape, dtype=complex)
                one = np.ones(self.lam.shape, dtype=complex)
                ru, tu, rd, td = zero, one, zero, one
            else:
                ru, tu = _fresnel(self.eps[m], self.eps[m + 1], self.h[m], self.h[m + 1],
                                  self.k[m], self.k[m + 1], pol)
                rd, td = _fresnel(self.eps[m + 1], self.eps[m], self.h[m + 1], self.h[m],
                                  self.k[m + 1], self.k[m], pol)
            r_up.append(ru)
            t_up.append(tu)
            r_dn.append(rd)
            t_dn.append(td)
        self.r_up, self.t_up = np.array(r_up), np.array(t_up)
        self.r_dn, self.t_dn = np.array(r_dn), np.array(t_dn)

        ident = SMatrix.identity(self.lam.shape)

        def iface(m):
            return SMatrix(self.r_up[m], self.t_up[m], self.r_dn[m], self.t_dn[m])

        def prop(j):
            if j == 0 or j == self.last:
                return ident
            z0 = np.zeros(self.lam.shape, dtype=complex)
            return SMatrix(z0, self.e[j], z0, self.e[j])

        above = [None] * (n + 2)
        above[n + 1] = ident
        for j in range(n, -1, -1):
            above[j] = star(iface(j), star(prop(j + 1), above[j + 1]))
        below = [None] * (n + 2)
        below[0] = ident
        for j in range(1, n + 2):
            below[j] = star(star(below[j - 1], prop(j - 1)), iface(j - 1))
        self.total = above[0]
        self.R_up = np.array([s.r11 for s in above])
        self.R_dn = np.array([s.r22 for s in below])

        # transfer of an up-going wave across interface m into region m+1,
        # including the multiple reflections inside region m+1
        self.tau_up = np.array([
            self.t_up[m] / (1.0 - self.r_dn[m] * self.R_up[m + 1] * self.e[m + 1] ** 2)
            if m + 1 < self.last else self.t_up[m]
            for m in range(n + 1)])
        self.tau_dn = np.array([
            self.t_dn[m] / (1.0 - self.r_up[m] * self.R_dn[m] * self.e[m] ** 2)
            if m > 0 else self.t_dn[m]
            for m in range(n + 1)])

    # -- reference planes -------------------------------------------------
    def z_bottom(self, j):
        return self.z[max(j - 1, 0)]

    def z_top(self, j):
        return self.z[min(j, self.last - 1)]

    def _source_denominator(self, s):
        if s == 0 or s == self.last:
            return np.ones(self.lam.shape, dtype=complex)
        return 1.0 - self.R_dn[s] * self.R_up[s] * self.e[s] ** 2

    def reduced(self, f, s):
        """Boundary-referenced amplitudes ``(A, B, C, D)`` for field ``f`` and source ``s``.

        A term reads, e.g., ``A~ exp(i h_f (z - z_bottom(f))) exp(i h_s (z_top(s) - z'))``.
        """
        last = self.last
        if not (0 <= f <= last and 0 <= s <= last):
            raise IndexError("region index out of range")
        R_up, R_dn, e = self.R_up, self.R_dn, self.e
        es = e[s] if 0 < s < last else np.ones(self.lam.shape, dtype=complex)
        ef = e[f] if 0 < f < last else np.ones(self.lam.shape, dtype=complex)
        M = self._source_denominator(s)
        if f == s:
            A = R_dn[s] * R_up[s] * es / M
            B = R_dn[s] / M
            C = R_up[s] / M
            D = R_up[s] * R_dn[s] * es / M
        elif f > s:
            X = self.tau_up[s].copy()
            for j in range(s + 1, f):
                X = X * e[j] * self.tau_up[j]
            A = X / M
            B = X * R_dn[s] * es / M
            C = R_up[f] * ef * X / M
            D = C * R_dn[s] * es
        else:
            Y = self.tau_dn[s - 1].copy()
            for j in range(s - 1, f, -1):
                Y = Y * e[j] * self.tau_dn[j - 1]
            C = Y * R_up[s] * es / M
            D = Y / M
            A = R_dn[f] * ef * C
            B = R_dn[f] * ef * D
        zero = np.zeros(self.lam.shape, dtype=complex)
        if f == 0:
            A, B = zero, zero
        if f == last:
            C, D = zero, zero
        if s == 0:
            B, D = zero, zero
        if s == last:
            A, C = zero, zero
        return A, B, C, D

    def absolute(self, f, s):
        """Amplitudes with absolute-z phase, multiplying ``e^{+-i h_f z} e^{+-i h_s z'}``."""
        A, B, C, D = self.reduced(f, s)
        hf, hs = self.h[f], self.h[s]
        zb_f, zt_f = self.z_bottom(f), self.z_top(f)
        zb_s, zt_s = self.z_bottom(s), self.z_top(s)
        with np.errstate(over="ignore", invalid="ignore"):
            A = A * np.exp(-1j * hf * zb_f + 1j * hs * zt_s)
            B = B * np.exp(-1j * hf * zb_f - 1j * hs * zb_s)
            C = C * np.exp(1j * hf * zt_f + 1j * hs * zt_s)
            D = D * np.exp(1j * hf * zt_f - 1j * hs * zb_s)
        return A, B, C, D

    def rt(self):
        """Surface-referenced ``(r, t, r_rev, t_rev)`` of the whole stack."""
        return self.total.r11, self.total.t21, self.total.r22, self.total.t12

    def incident_amplitudes(self):
        """Boundary-referenced ``(a_j, b_j)`` in every region for a unit wave from region I.

        Region I's up-going entry is the incident wave itself (1 at ``z_0``).
        """
        out = []
        for j in range(self.last + 1):
            A, _, C, _ = self.reduced(j, 0)
            out.append((A, C))
        out[0] = (np.ones(self.lam.shape, dtype=complex), out[0][1])
        return out

    def tangential_fields(self, j, a, b, where):
        """(E_t, H_t) scalars in region ``j`` at its ``'bottom'`` or ``'top'`` plane."""
        d_phase = self.e[j] if 0 < j < self.last else np.ones(self.lam.shape, dtype=complex)
        if where == "bottom":
            up, down = a, b * d_phase
        else:
            up, down = a * d_phase, b
        if j == 0:
            up, down = a, b
        if j == self.last:
            up, down = a, b
        h, k = self.h[j], self.k[j]
        if self.pol == TE:
            return up + down, h * (up - down)
        return (h / k) * (up - down), k * (up + down)

    def continuity_residual(self):
        """Largest relative mismatch of tangential E and H across all interfaces
        for a unit wave incident from region I."""
        amps = self.incident_amplitudes()
        worst = np.zeros(self.lam.shape)
        for m in range(self.last):
            lo = self.tangential_fields(m, *amps[m], where="top")
            hi = self.tangential_fields(m + 1, *amps[m + 1], where="bottom")
            for u, v in zip(lo, hi):
                scale = np.maximum(np.maximum(np.abs(u), np.abs(v)), 1e-300)
                worst = np.maximum(worst, np.abs(u - v) / scale)
        return worst


@dataclass(frozen=True)
class ScatteringCoeffs:
    """Absolute-phase amplitudes of the scattering Green tensor for one
    (polarization, field region, source region)."""

    A: complex
    B: complex
    C: complex
    D: complex
    polarization: str
    field_region: int
    source_region: int


def _scalar(x):
    return complex(x) if np.ndim(x) == 0 else x


def scattering_coefficients(stack, mode, f, s):
    """Scattering amplitudes ``A, B, C, D`` for field region ``f`` and source region ``s``.

    ``f`` and ``s`` are region indices (0 = region I, 1..N = layers,
    N+1 = region III).  Phases are absolute in ``z`` (see module docs).
    """
    solver = ModalSolver(stack, mode.omega, mode.lam, mode.polarization)
    A, B, C, D = solver.absolute(f, s)
    return ScatteringCoeffs(_scalar(A), _scalar(B), _scalar(C), _scalar(D),
                            mode.polarization, f, s)


def slab_rt(stack, mode):
    """Surface-referenced ``(r, t)`` for incidence from region I.

    ``r`` is measured at ``z = -L/2`` and ``t`` at ``z = +L/2``.
    """
    solver = ModalSolver(stack, mode.omega, mode.lam, mode.polarization)
    r, t, _, _ = solver.rt()
    return _scalar(r), _scalar(t)


# ---------------------------------------------------------------------------
# Guided-wave dispersion function
# ---------------------------------------------------------------------------

def _sin_over_h(h, d):
    x = h * d
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, h)
    return np.where(small, d * (1.0 - x * x / 6.0), np.sin(x) / safe)


def dispersion_function(stack, omega, lam, pol):
    """Determinant whose zeros are the bound (source-free) modes of the stack.

    The tangential fields of a purely outgoing wave in region I are carried
    through every layer with matrices that are entire in ``lam`` and matched
    to a purely outgoing wave in region III.  For a single interface this is
    proportional to ``h_I + h_III`` (TE) or ``eps_III h_I + eps_I h_III`` (TM).
    ``lam`` may be complex.
    """
    _check_pol(pol)
    c = stack.units.c
    lam = np.asarray(lam, dtype=complex)
    eps = stack.eps(omega)
    k = np.sqrt(eps) * omega / c
    h0 = axial_wavenumber(eps[0], omega, lam, c)
    hN = axial_wavenumber(eps[-1], omega, lam, c)
    if pol == TE:
        E, H = np.ones_like(lam), -h0
    else:
        E, H = -h0 / k[0], k[0] * np.ones_like(lam)
    for j, layer in enumerate(stack.layers, start=1):
        h2 = eps[j] * (omega / c) ** 2 - lam * lam
        hj = np.sqrt(h2)  # any branch: only even functions of h are used
        cs = np.cos(hj * layer.thickness)
        sh = _sin_over_h(hj, layer.thickness)
        if pol == TE:
            E, H = cs * E + 1j * sh * H, 1j * h2 * sh * E + cs * H
        else:
            kj2 = k[j] ** 2
            E, H = cs * E + 1j * (h2 / kj2) * sh * H, 1j * kj2 * sh * E + cs * H
    if pol == TE:
        return E * hN - H
    return E * k[-1] - H * hN / k[-1]
