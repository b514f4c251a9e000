"""Input-output relations of a planar stack, mode by mode.

Everything here is per spectral channel ``(omega, lam, n, parity, pol)``.
Planar stacks are translation invariant and do not mix polarizations, so the
surface operators that map incoming to outgoing amplitudes collapse to scalar
reflection and transmission coefficients.  Material noise enters through the
absorbing layers; its strength is tied to the absorbed power, which gives the
balance checks below.

Flux normalisation: the z-component of the Poynting flux of a unit-amplitude
mode in a lossless exterior medium is proportional to ``Re h`` for both
polarizations (TM amplitudes multiply the N wave), so reflectance is
``|r|**2`` and transmittance ``|t|**2 Re h_III / Re h_I``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IllPosedError, NonConvergence, RegionMismatchError
from .green import GreenPartLabel, green_part
from .numerics import axial_wavenumber, find_root_complex, winding_number
from .stack import ModalSolver, dispersion_function
from .units import SI
from .waves import TE, TM

LEFT = "left"
RIGHT = "right"
I_TO_III = "I->III"
III_TO_I = "III->I"


def noise_amplitude(eps_imag, omega, units=SI):
    """Noise-current amplitude ``omega sqrt(hbar eps0 eps'' / pi)`` per bosonic mode."""
    if eps_imag < 0:
        raise DomainError("Im(eps) must be >= 0")
    if not omega > 0:
        raise DomainError("omega must be positive")
    return omega * np.sqrt(units.hbar * units.eps0 * eps_imag / np.pi)


# ---------------------------------------------------------------------------
# Field kernels at the two surfaces
# ---------------------------------------------------------------------------

_ROUTES = {
    (LEFT, "in"): "10", (LEFT, "refl"): "11", (LEFT, "transm"): "13", (LEFT, "layer"): "12",
    (RIGHT, "in"): "30", (RIGHT, "refl"): "33", (RIGHT, "transm"): "31", (RIGHT, "layer"): "32",
}


def field_kernel(stack, omega, surface, part, r_perp, s, layer=None, quad=None, **kw):
    """Kernel ``i omega mu0 G_part(r, s)`` multiplying the source current.

    ``surface`` is ``"left"`` (``z = -L/2``) or ``"right"`` (``z = +L/2``);
    ``r_perp`` is the transverse position ``(x, y)`` on it.  ``part`` is
    ``"in"``, ``"refl"``, ``"transm"`` or ``"layer"`` (with ``layer`` the
    1-based layer index, or ``None`` to take the layer holding ``s``).
    """
    try:
        code = _ROUTES[(surface, part)]
    except KeyError:
        raise RegionMismatchError(f"no kernel for surface={surface!r}, part={part!r}") from None
    if layer is not None:
        if part != "layer":
            raise RegionMismatchError("a layer index is only valid with part='layer'")
        code += f":{layer}"
    z = stack.interfaces[0] if surface == LEFT else stack.interfaces[-1]
    r = np.array([r_perp[0], r_perp[1], z], dtype=float)
    g = green_part(stack, omega, GreenPartLabel.parse(code), r, s, quad=quad, **kw)
    return 1j * omega * stack.units.mu0 * g


# ---------------------------------------------------------------------------
# Per-mode reflection and transmission
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeCoefficients:
    """Surface-referenced coefficients of one mode.

    ``r``/``t``: incidence from region I (``r`` at ``z = -L/2``, ``t`` at
    ``z = +L/2``); ``r_rev``/``t_rev``: incidence from region III.
    """

    mode: object
    r: complex
    t: complex
    t_rev: complex
    r_rev: complex


def _solver(stack, mode):
    return ModalSolver(stack, mode.omega, np.array([mode.lam], dtype=float), mode.polarization)


def _probe(stack, mode, probe_depth):
    if probe_depth is None:
        k0 = abs(stack.wavenumbers(mode.omega)[0])
        return 1.0 / k0
    if probe_depth < 0:
        raise DomainError("probe depth must be >= 0")
    return float(probe_depth)


def _kernel_ratio(scattered, free):
    if abs(free) < 1e-300:
        raise IllPosedError(
            "free spectral kernel underflowed at the probe depth; the mode is too "
            "deeply evanescent for a kernel-ratio inversion")
    return complex(scattered / free)


def reflection_coeff(stack, mode, probe_depth=None):
    """Reflection coefficient of ``mode`` for incidence from region I.

    Computed as the ratio of the reflected (scattering) spectral kernel to
    the free incident kernel, both observed on the surface ``z = -L/2`` for a
    source ``probe_depth`` below it (default ``1/|k_I|``).  The ratio does
    not depend on the probe depth; it fails with :class:`IllPosedError` when
    the free kernel underflows, which fences off deep-evanescent modes.
    """
    sol = _solver(stack, mode)
    h0 = sol.h[0][0]
    free = np.exp(1j * h0 * _probe(stack, mode, probe_depth))
    _, _, C, _ = sol.reduced(0, 0)
    return _kernel_ratio(C[0] * free, free)


def transmission_coeff(stack, mode, direction=I_TO_III, probe_depth=None):
    """Transmission coefficient, surface to surface, in either direction."""
    sol = _solver(stack, mode)
    last = sol.last
    if direction == I_TO_III:
        h = sol.h[0][0]
        coef = sol.reduced(last, 0)[0]
    elif direction == III_TO_I:
        h = sol.h[last][0]
        coef = sol.reduced(0, last)[3]
    else:
        raise ValueError(f"direction must be {I_TO_III!r} or {III_TO_I!r}")
    probe = _probe(stack, mode, probe_depth)
    free = np.exp(1j * h * probe)
    return _kernel_ratio(coef[0] * free, free)


def mode_coefficients(stack, mode):
    r, t, r_rev, t_rev = (complex(x[0]) for x in _solver(stack, mode).rt())
    return ModeCoefficients(mode, r, t, t_rev, r_rev)


def polarization_matrix(stack, mode):
    """2x2 (TE, TM) reflection and transmission blocks; off-diagonals are exactly zero."""
    R = np.zeros((2, 2), dtype=complex)
    T = np.zeros((2, 2), dtype=complex)
    for i, pol in enumerate((TE, TM)):
        sol = ModalSolver(stack, mode.omega, np.array([mode.lam]), pol)
        r, t, _, _ = sol.rt()
        R[i, i], T[i, i] = r[0], t[0]
    return R, T


# ---------------------------------------------------------------------------
# Depth integrals and balance
# ---------------------------------------------------------------------------

def _exp_integral(x, d):
    """``int_0^d exp(x z) dz`` for complex ``x``, stable as ``x d -> 0``."""
    x = np.asarray(x, dtype=complex)
    xd = x * d
    small = np.abs(xd) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, d * (1.0 + 0.5 * xd), np.expm1(xd) / safe)


def layer_gram(h, d):
    """Gram matrix ``int_0^d phi_a conj(phi_b)`` of ``phi_1 = e^{ih(d-z)}``, ``phi_2 = e^{ihz}``.

    Returns an array of shape ``(2, 2) + h.shape``.
    """
    h = np.asarray(h, dtype=complex)
    g_diag = _exp_integral(-2.0 * h.imag, d)
    g12 = np.exp(1j * h * d) * _exp_integral(-2j * h.real, d)
    return np.array([[g_diag, g12], [np.conj(g12), g_diag]])


def _quad_form(gram, u, v):
    """``int |u phi_1 + v phi_2|^2`` given the Gram matrix."""
    w = (u, v)
    return sum((w[a] * np.conj(w[b]) * gram[a, b]).real for a in range(2) for b in range(2))


def _intensity(sol, j, down, up, gram):
    """Depth integral of |E|^2 for the profile ``down*phi_1 + up*phi_2`` in layer ``j``."""
    if sol.pol == TE:
        return _quad_form(gram, down, up)
    h, k, lam = sol.h[j], sol.k[j], sol.lam
    tangential = np.abs(h) ** 2 * _quad_form(gram, -down, up)
    normal = np.abs(lam) ** 2 * _quad_form(gram, down, up)
    return (tangential + normal) / abs(k) ** 2


def _check_exteriors(sol):
    if sol.eps[0].imag != 0 or sol.eps[-1].imag != 0:
        raise DomainError("balance checks need lossless exterior media")
    if np.any(np.asarray(sol.lam).real >= sol.k[0].real):
        raise DomainError("balance checks need a mode propagating in region I (lam < k_I)")


def _flux_ratio(h_out, h_in):
    return np.where(np.abs(h_out.imag) > 0, 0.0, h_out.real) / h_in.real


@dataclass(frozen=True)
class BalanceResult:
    """Per-mode energy bookkeeping.

    ``reflectance`` is ``|r|**2``, ``transmittance`` the transmitted flux
    fraction (``|t|**2`` for identical exteriors), ``absorbed`` the
    depth-integrated loss and ``residual`` ``|absorbed - (1 - R - T)|``.
    """

    reflectance: float
    transmittance: float
    absorbed: float
    residual: float

    def __iter__(self):
        return iter((self.reflectance, self.transmittance, self.absorbed, self.residual))


def _balance_arrays(sol, corrupt=None):
    _check_exteriors(sol)
    last = sol.last
    r, t, _, _ = sol.rt()
    if corrupt is not None:
        r = r * corrupt
    R = np.abs(r) ** 2
    T = np.abs(t) ** 2 * _flux_ratio(sol.h[last], sol.h[0])
    k0 = sol.omega / sol.stack.units.c
    amps = sol.incident_amplitudes()
    absorbed = np.zeros(np.shape(R))
    for j, layer in enumerate(sol.stack.layers, start=1):
        loss = sol.eps[j].imag
        if loss == 0:
            continue
        up, down = amps[j]
        gram = layer_gram(sol.h[j], layer.thickness)
        absorbed = absorbed + k0 ** 2 * loss * _intensity(sol, j, down, up, gram)
    absorbed = absorbed / sol.h[0].real
    residual = np.abs(absorbed - (1.0 - R - T))
    return R, T, absorbed, residual


def energy_balance(stack, mode):
    """Reflectance, transmittance, absorbed fraction and balance residual of ``mode``.

    The absorbed fraction is the closed-form depth integral of
    ``(omega/c)**2 eps'' |E|**2`` over the layers for a unit incident wave,
    divided by the incident flux; the residual compares it with
    ``1 - R - T``.
    """
    R, T, A, res = _balance_arrays(_solver(stack, mode))
    return BalanceResult(float(R[0]), float(T[0]), float(A[0]), float(res[0]))


# ---------------------------------------------------------------------------
# Noise kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayerNoise:
    """Noise coefficients of one layer for one polarization.

    ``into_I`` holds the amplitudes multiplying ``exp(i h (z_top - z'))`` and
    ``exp(i h (z' - z_bottom))`` (waves leaving the layer downwards and
    upwards, then carried to region I); ``into_III`` likewise for region III.
    ``gram`` is the closed-form Gram matrix of those two depth profiles.
    """

    layer: int
    polarization: str
    h: complex
    k: complex
    prefactor: complex
    weight: complex
    amplitude: float
    into_I: tuple
    into_III: tuple
    gram: np.ndarray


@dataclass(frozen=True)
class NoiseKernelSet:
    mode: object
    layers: tuple
    h_I: complex
    h_III: complex
    units: object = SI

    def strength(self, side="I"):
        """Noise power emitted into region ``side`` per unit incident flux.

        Commutator preservation of the outgoing mode requires it to equal
        ``1 - |r|**2 - T_rev`` on the region-I side (and the mirror
        expression on the region-III side).
        """
        if side not in ("I", "III"):
            raise ValueError("side must be 'I' or 'III'")
        h_out = self.h_I if side == "I" else self.h_III
        total = 0.0
        for ln in self.layers:
            if ln.amplitude == 0:
                continue
            u, v = ln.into_I if side == "I" else ln.into_III
            scale = h_out / ln.h
            if ln.polarization == TE:
                integral = _quad_form(ln.gram, scale * u, scale * v)
            else:
                lam = self.mode.lam
                integral = (abs(ln.h) ** 2 * _quad_form(ln.gram, -scale * u, scale * v)
                            + lam ** 2 * _quad_form(ln.gram, scale * u, scale * v)) / abs(ln.k) ** 2
            total += ln.amplitude ** 2 * float(np.real(integral))
        # amplitude**2 = omega**2 hbar eps0 eps''/pi; pi mu0/hbar turns it into (omega/c)**2 eps''
        return total * np.pi * self.units.mu0 / self.units.hbar / h_out.real


def noise_kernels(stack, mode):
    """Noise kernels of every absorbing layer for ``mode``.

    Layers with ``eps'' = 0`` carry zero amplitude and zero coefficients.
    """
    sol = _solver(stack, mode)
    units = stack.units
    last = sol.last
    prefactor = -mode.omega * units.mu0 / (4 * np.pi)
    out = []
    for j, layer in enumerate(stack.layers, start=1):
        h = complex(sol.h[j][0])
        loss = float(sol.eps[j].imag)
        amp = noise_amplitude(loss, mode.omega, units)
        weight = (2.0 if mode.n else 1.0) / (mode.lam * h) if mode.lam > 0 else np.inf
        if amp == 0:
            into_I = into_III = (0j, 0j)
        else:
            _, _, C, D = sol.reduced(0, j)
            A, B, _, _ = sol.reduced(last, j)
            into_I = (complex(C[0]), complex(D[0]))
            into_III = (complex(A[0]), complex(B[0]))
        out.append(LayerNoise(j, mode.polarization, h, complex(sol.k[j]), prefactor, weight,
                              float(amp), into_I, into_III, layer_gram(h, layer.thickness)))
    return NoiseKernelSet(mode, tuple(out), complex(sol.h[0][0]), complex(sol.h[last][0]), units)


# ---------------------------------------------------------------------------
# Surface-guided waves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePole:
    lam: complex
    residual: float
    converged: bool = True


def _crosses_cut(k, window, samples=4096):
    """True if the cut ``k**2 - lam**2 in [0, inf)`` meets the window boundary."""
    re_min, re_max, im_min, im_max = window
    corners = [complex(re_min, im_min), complex(re_max, im_min),
               complex(re_max, im_max), complex(re_min, im_max)]
    t = np.linspace(0.0, 1.0, samples + 1)
    k2 = complex(k) ** 2
    for a, b in zip(corners, corners[1:] + corners[:1]):
        g = k2 - (a + (b - a) * t) ** 2
        im = g.imag
        on_cut = (np.abs(im) <= 1e-14 * np.abs(k2)) & (g.real >= 0)
        flips = (np.sign(im[1:]) * np.sign(im[:-1]) < 0) & (0.5 * (g.real[1:] + g.real[:-1]) > 0)
        if np.any(on_cut) or np.any(flips):
            return True
    return False


def _polish(f, root, steps=6):
    """A few extra Newton steps past the stopping tolerance, kept only while |f| drops."""
    best, f_best = root, abs(f(root))
    for _ in range(steps):
        d = 1e-7 * max(abs(best), 1.0)
        df = (f(best + d) - f(best - d)) / (2 * d)
        if df == 0:
            break
        cand = best - f(best) / df
        f_cand = abs(f(cand))
        if not f_cand < f_best:
            break
        best, f_best = cand, f_cand
    return best


def find_surface_poles(stack, omega, pol, window, tol=1e-10, max_depth=12, strict=True):
    """Zeros of the stack's resonance denominator inside a complex ``lam`` rectangle.

    ``window`` is ``(re_min, re_max, im_min, im_max)``.  Roots are counted
    with the argument principle, isolated by recursive bisection of the
    rectangle and polished by Newton iteration.  A window that the branch
    cut of region I or III passes through is rejected, since the
    denominator is not analytic there.

    Returns a list of :class:`SurfacePole` sorted by real part.  With
    ``strict`` a root that could not be polished raises
    :class:`NonConvergence`; otherwise it is returned with
    ``converged=False``.
    """
    re_min, re_max, im_min, im_max = (float(x) for x in window)
    if not (re_max > re_min and im_max > im_min):
        raise ValueError("window must have re_max > re_min and im_max > im_min")
    k = stack.wavenumbers(omega)
    for kk in (k[0], k[-1]):
        if _crosses_cut(kk, (re_min, re_max, im_min, im_max)):
            raise DomainError(
                f"search window meets the branch cut from k = {complex(kk)}; move it off the cut")

    def D(lam):
        return complex(dispersion_function(stack, omega, np.array([lam]), pol)[0])

    # the scale of D varies wildly with the stack; normalise Newton's stopping rule
    scale = max(abs(D(complex(re_min, im_min))), abs(D(complex(re_max, im_max))), 1e-300)

    def Dn(lam):
        return D(lam) / scale

    size = max(re_max - re_min, im_max - im_min)
    found, failed = [], []

    def inside(z, box):
        a, b, c, d = box
        pad = 1e-9 * size
        return a - pad <= z.real <= b + pad and c - pad <= z.imag <= d + pad

    def search(box, depth):
        count = winding_number(Dn, *box)
        if count <= 0:
            return
        a, b, c, d = box
        if count == 1 or depth >= max_depth:
            seed = complex(0.5 * (a + b), 0.5 * (c + d))
            try:
                root = _polish(Dn, find_root_complex(Dn, seed, tol=tol))
                if inside(root, box):
                    found.append(root)
                    if count == 1:
                        return
            except NonConvergence:
                pass
            if depth >= max_depth:
                failed.append(seed)
                return
        if (b - a) >= (d - c):
            m = 0.5 * (a + b)
            halves = ((a, m, c, d), (m, b, c, d))
        else:
            m = 0.5 * (c + d)
            halves = ((a, b, c, m), (a, b, m, d))
        for h in halves:
            try:
                search(h, depth + 1)
            except ValueError:
                # a root sits on the split line; nudge it
                shift = 1e-3 * (b - a if h[1] - h[0] < b - a else d - c)
                nudged = (h[0], h[1] + shift, h[2], h[3]) if (b - a) >= (d - c) else (h[0], h[1], h[2], h[3] + shift)
                search(nudged, depth + 1)

    search((re_min, re_max, im_min, im_max), 0)
    roots = []
    for z in found:
        if all(abs(z - w) > 1e-8 * max(abs(z), 1.0) for w in (p.lam for p in roots)):
            roots.append(SurfacePole(z, abs(Dn(z)), True))
    if failed:
        if strict:
            raise NonConvergence(f"{len(failed)} pole candidate(s) could not be polished",
                                 estimate=roots, error=None)
        roots.extend(SurfacePole(z, abs(Dn(z)), False) for z in failed)
    return sorted(roots, key=lambda p: (p.lam.real, p.lam.imag))


def pole_count(stack, omega, pol, window):
    """Argument-principle count of resonance zeros inside ``window``."""
    def D(lam):
        return complex(dispersion_function(stack, omega, np.array([lam]), pol)[0])
    return winding_number(D, *window)
