"""Free and scattering Green tensors of a planar stack, and their region parts.

The total tensor is ``G = G_free * [f == s] + G_scat`` where the free part is
the closed-form homogeneous-medium dyadic of the region holding both points
and the scattering part is the cylindrical-wave Sommerfeld integral::

    G_scat(r, s) = i/(4 pi) int_0^inf dlam sum_n sum_{e,o} (2 - delta_n0)/(lam h_s)
                   [ M(r, h_f) (A M(s, -h_s) + B M(s, h_s))
                   + M(r,-h_f) (C M(s, -h_s) + D M(s, h_s)) + same with N ]

The cylinder axis is placed through the source point by default; then only
``n = 0, 1`` survive and the azimuthal sum is exact.  A different axis can be
requested, in which case the sum runs to ``n_max`` and is truncated adaptively.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError, RegionMismatchError
from .numerics import QuadratureSpec, bessel_j, bessel_j_orders, integrate_spectral
from .stack import ModalSolver
from .units import SI
from .waves import EVEN, ODD, TE, TM, m_wave, n_wave, to_cartesian

_PARITIES = (EVEN, ODD)


def free_green(eps, omega, r, s, c=SI.c):
    """Homogeneous-medium dyadic Green tensor ``(I + grad grad / k^2) e^{ikR}/(4 pi R)``.

    The delta-function term at ``r = s`` is not represented; coincident
    points raise :class:`DomainError`.
    """
    k = np.sqrt(complex(eps)) * omega / c
    R = np.asarray(r, dtype=float) - np.asarray(s, dtype=float)
    dist = float(np.linalg.norm(R))
    if dist < 1e-12:
        raise DomainError("free Green tensor is singular at coincident points")
    u = R / dist
    x = k * dist
    g = np.exp(1j * x) / (4 * np.pi * dist)
    a = 1.0 + 1j / x - 1.0 / (x * x)
    b = -1.0 - 3j / x + 3.0 / (x * x)
    return g * (a * np.eye(3) + b * np.outer(u, u))


@dataclass(frozen=True)
class GreenPartLabel:
    """Which piece of the region-decomposed Green tensor to return.

    ``field`` is ``"I"`` or ``"III"``; ``source`` is ``"free"``, ``"I"``,
    ``"III"`` or ``"II"`` (a layer; ``layer`` then selects it, ``None`` meaning
    "whichever layer holds the source point").
    """

    field: str
    source: str
    layer: int | None = None

    def __post_init__(self):
        if self.field not in ("I", "III"):
            raise ValueError("field region must be 'I' or 'III'")
        if self.source not in ("free", "I", "II", "III"):
            raise ValueError("source must be 'free', 'I', 'II' or 'III'")
        if self.layer is not None and self.source != "II":
            raise ValueError("a layer index only makes sense for source 'II'")

    @classmethod
    def parse(cls, code):
        """Parse the two-digit notation ``"10"``, ``"11"``, ``"12"``, ``"12:2"``, ``"13"``, ``"30"`` ...."""
        code = str(code).strip()
        head, _, tail = code.partition(":")
        if len(head) != 2 or head[0] not in "13" or head[1] not in "0123":
            raise ValueError(f"cannot parse Green part label {code!r}")
        field = "I" if head[0] == "1" else "III"
        source = {"0": "free", "1": "I", "2": "II", "3": "III"}[head[1]]
        layer = int(tail) if tail else None
        if tail and source != "II":
            raise ValueError(f"layer index given for non-layer source in {code!r}")
        return cls(field, source, layer)

    @property
    def code(self):
        f = "1" if self.field == "I" else "3"
        s = {"free": "0", "I": "1", "II": "2", "III": "3"}[self.source]
        return f + s + (f":{self.layer}" if self.layer is not None else "")


def _region_index(stack, name):
    return 0 if name == "I" else stack.n_layers + 1


def _kmax(stack, omega):
    return float(np.max(np.abs(stack.wavenumbers(omega))))


def _breakpoints(stack, omega):
    k = stack.wavenumbers(omega)
    return sorted({float(abs(x)) for x in k} | {float(x.real) for x in k if x.real > 0})


def _check_pole_free(stack, omega):
    eps = stack.eps(omega)
    if np.all(eps.imag == 0):
        ext = max(eps[0].real, eps[-1].real)
        if np.any(eps.real > ext) or np.any(eps.real < 0):
            raise DegenerateError(
                "lossless stack may carry bound modes on the real lam axis; the "
                "real-axis quadrature needs some absorption to move them off it")


def _as_points(p):
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.shape[-1] != 3:
        raise ValueError("points must have 3 Cartesian components")
    return p


def _distance_to_planes(stack, j, z):
    lo, hi = stack.bounds(j)
    return np.minimum(np.abs(np.asarray(z) - lo), np.abs(hi - np.asarray(z)))


class _Integrand:
    """Vectorised spectral integrand for a batch of (field, source) pairs."""

    def __init__(self, stack, omega, f, s, r, src, axis, n_max):
        self.stack, self.omega, self.f, self.s = stack, omega, f, s
        self.last = stack.n_layers + 1
        self.k = stack.wavenumbers(omega)
        if axis is None:
            d = r[:, :2] - src[:, :2]
            self.rho_f = np.hypot(d[:, 0], d[:, 1])
            self.psi_f = np.arctan2(d[:, 1], d[:, 0])
            self.rho_s = np.zeros(len(src))
            self.psi_s = np.zeros(len(src))
            self.orders = range(2)
            self.per_order = False
        else:
            ax = np.asarray(axis, dtype=float)
            df, ds = r[:, :2] - ax, src[:, :2] - ax
            self.rho_f, self.psi_f = np.hypot(df[:, 0], df[:, 1]), np.arctan2(df[:, 1], df[:, 0])
            self.rho_s, self.psi_s = np.hypot(ds[:, 0], ds[:, 1]), np.arctan2(ds[:, 1], ds[:, 0])
            self.orders = range(n_max + 1)
            self.per_order = True
        self.z, self.zp = r[:, 2], src[:, 2]

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        n_pts = len(self.z)
        lead = (len(self.orders),) if self.per_order else ()
        out = np.zeros((lam.size,) + lead + (n_pts, 3, 3), dtype=complex)
        f, s, last = self.f, self.s, self.last
        lamc = lam[:, None]
        xf = lamc * self.rho_f[None, :]
        xs = lamc * self.rho_s[None, :]
        if self.per_order:
            n_top = self.orders[-1]
            Jf, dJf = bessel_j_orders(n_top, xf)
            Js, dJs = bessel_j_orders(n_top, xs)
        for pol in (TE, TM):
            sol = ModalSolver(self.stack, self.omega, lam, pol)
            A, B, C, D = (c[:, None] for c in sol.reduced(f, s))
            hf, hs = sol.h[f][:, None], sol.h[s][:, None]
            kf, ks = self.k[f], self.k[s]
            zb_f, zt_f = sol.z_bottom(f), sol.z_top(f)
            zb_s, zt_s = sol.z_bottom(s), sol.z_top(s)
            with np.errstate(divide="ignore", invalid="ignore"):
                weight = 1.0 / (lamc * hs)
            for idx, n in enumerate(self.orders):
                if self.per_order:
                    jf, djf, js, djs = Jf[n], dJf[n], Js[n], dJs[n]
                else:
                    jf, djf = bessel_j(n, xf)
                    js, djs = bessel_j(n, xs)
                acc = np.zeros((lam.size, n_pts, 3, 3), dtype=complex)
                for par in _PARITIES:
                    def wave(h, k, rho, psi, zz, J, dJ):
                        if pol == TE:
                            v = m_wave(n, par, lamc, h, rho, psi, zz, J, dJ)
                        else:
                            v = n_wave(n, par, lamc, h, k, rho, psi, zz, J, dJ)
                        return to_cartesian(v, psi[None, :] if np.ndim(psi) else psi)

                    f_up = f_dn = s_m = s_p = None
                    if f != 0:
                        f_up = wave(hf, kf, self.rho_f, self.psi_f, self.z - zb_f, jf, djf)
                    if f != last:
                        f_dn = wave(-hf, kf, self.rho_f, self.psi_f, self.z - zt_f, jf, djf)
                    if s != last:
                        s_m = wave(-hs, ks, self.rho_s, self.psi_s, self.zp - zt_s, js, djs)
                    if s != 0:
                        s_p = wave(hs, ks, self.rho_s, self.psi_s, self.zp - zb_s, js, djs)
                    for coef, fw, sw in ((A, f_up, s_m), (B, f_up, s_p),
                                         (C, f_dn, s_m), (D, f_dn, s_p)):
                        if fw is None or sw is None:
                            continue
                        acc += coef[..., None, None] * np.einsum("lpi,lpj->lpij", fw, sw)
                acc *= ((2.0 if n else 1.0) * weight)[..., None, None]
                # lam = 0 carries zero measure; its 0/0 is dropped
                acc[lam == 0] = 0.0
                if self.per_order:
                    out[:, idx] += acc
                else:
                    out += acc
        return out * (1j / (4 * np.pi))


def scattering_green(stack, omega, r, s, field_region=None, source_region=None,
                     quad=None, n_max=40, axis=None, full_output=False):
    """Scattering part of the Green tensor of ``stack`` at frequency ``omega``.

    Parameters
    ----------
    r, s : array_like
        Field and source points, shape ``(3,)`` or ``(m, 3)`` (broadcast
        against each other).  All pairs must share one field region and one
        source region.
    field_region, source_region : int, optional
        Region indices; needed only for points lying exactly on an interface.
    quad : QuadratureSpec, optional
        Defaults to ``QuadratureSpec()``; an unset ``lambda_max`` becomes
        ``max(20 max|k_j|, 40 / D)`` with ``D`` the smallest combined
        distance of the points from their reference planes.
    axis : (x, y), optional
        Cylinder axis.  ``None`` (default) puts it through each source point,
        which makes the azimuthal sum exact at ``n <= 1``.
    n_max : int
        Azimuthal cap when ``axis`` is given.

    Returns
    -------
    ndarray
        ``(3, 3)`` or ``(m, 3, 3)`` complex tensor; with ``full_output`` also
        a dict with the quadrature error bound and, for an explicit axis, the
        azimuthal truncation order and remainder estimate.
    """
    quad = quad or QuadratureSpec()
    rr, ss = _as_points(r), _as_points(s)
    rr, ss = np.broadcast_arrays(rr, ss)
    single = np.ndim(r) == 1 and np.ndim(s) == 1
    f = stack.region_of(rr[0, 2]) if field_region is None else field_region
    sreg = stack.region_of(ss[0, 2]) if source_region is None else source_region
    for z in rr[:, 2]:
        if not stack.contains(f, z):
            raise RegionMismatchError(f"field point z={z} is not in region {stack.region_name(f)}")
    for z in ss[:, 2]:
        if not stack.contains(sreg, z):
            raise RegionMismatchError(f"source point z={z} is not in region {stack.region_name(sreg)}")

    if f == sreg and all(e == stack.eps(omega)[0] for e in stack.eps(omega)):
        zero = np.zeros((len(rr), 3, 3), dtype=complex)
        out = zero[0] if single else zero
        return (out, {"error": 0.0}) if full_output else out
    _check_pole_free(stack, omega)

    kmax = _kmax(stack, omega)
    if quad.lambda_max is None:
        dist = np.min(_distance_to_planes(stack, f, rr[:, 2]) + _distance_to_planes(stack, sreg, ss[:, 2]))
        lam_max = 20.0 * kmax
        if dist > 0:
            lam_max = max(lam_max, 40.0 / dist)
        else:
            lam_max = 1e4 * kmax
        quad = QuadratureSpec(quad.rel_tol, quad.abs_tol, quad.max_subdivisions, lam_max)

    integrand = _Integrand(stack, omega, f, sreg, rr, ss, axis, n_max)
    value, err = integrate_spectral(integrand, quad, _breakpoints(stack, omega))
    info = {"error": err, "lambda_max": quad.lambda_max}
    if axis is not None:
        value, n_used, remainder = _truncate_orders(value, err, quad)
        info.update(n_used=n_used, remainder=remainder)
        err = err + remainder
        info["error"] = err
    out = value[0] if single else value
    return (out, info) if full_output else out


def _truncate_orders(per_order, err, quad):
    """Sum azimuthal orders until one contributes < 1% of the tolerance."""
    norms = np.array([np.max(np.abs(t)) for t in per_order])
    total = per_order.sum(axis=0)
    tol = max(quad.abs_tol, quad.rel_tol * np.max(np.abs(total)), err)
    cut = len(norms) - 1
    for n in range(1, len(norms)):
        if norms[n] < 0.01 * tol and (n + 1 == len(norms) or norms[n + 1] < 0.01 * tol):
            cut = n
            break
    else:
        warnings.warn("azimuthal sum reached n_max before converging", RuntimeWarning, stacklevel=3)
    kept = per_order[: cut + 1].sum(axis=0)
    # geometric estimate of what the dropped orders add
    a, b = norms[cut - 1], norms[cut]
    ratio = b / a if a > 0 else 0.0
    remainder = b * ratio / (1.0 - ratio) if ratio < 1 else float(np.sum(norms[cut + 1:])) + b
    return kept, cut, float(remainder)


def total_green(stack, omega, r, s, field_region=None, source_region=None, quad=None, **kw):
    """Full Green tensor: free part when both points share a region, plus scattering."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    f = stack.region_of(r[2]) if field_region is None else field_region
    sreg = stack.region_of(s[2]) if source_region is None else source_region
    g = scattering_green(stack, omega, r, s, f, sreg, quad=quad, **kw)
    if f == sreg:
        g = g + free_green(stack.eps(omega)[f], omega, r, s, stack.units.c)
    return g


def green_part(stack, omega, label, r, s, quad=None, **kw):
    """One term of the region decomposition of the Green tensor at a surface side.

    ``label`` is a :class:`GreenPartLabel` or its code (``"10"``, ``"11"``,
    ``"12:i"``, ``"13"``, ``"30"``, ...).  The region-I tensor equals
    ``G10 [s in I] + G11 + sum_i G12i + G13``; the region-III one likewise.
    """
    if not isinstance(label, GreenPartLabel):
        label = GreenPartLabel.parse(label)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    f = _region_index(stack, label.field)
    if not stack.contains(f, r[2]):
        raise RegionMismatchError(f"field point z={r[2]} is not in region {label.field}")
    if label.source == "free":
        if not stack.contains(f, s[2]):
            raise RegionMismatchError(
                f"free part G{label.code} needs the source in region {label.field}")
        return free_green(stack.eps(omega)[f], omega, r, s, stack.units.c)
    if label.source == "II":
        if stack.n_layers == 0:
            raise RegionMismatchError("the stack has no layers")
        sreg = label.layer
        if sreg is None:
            sreg = next((j for j in range(1, stack.n_layers + 1) if stack.contains(j, s[2])), None)
        if sreg is None or not 1 <= sreg <= stack.n_layers or not stack.contains(sreg, s[2]):
            raise RegionMismatchError(f"source z={s[2]} is not in layer {label.layer}")
    else:
        sreg = _region_index(stack, label.source)
        if not stack.contains(sreg, s[2]):
            raise RegionMismatchError(f"source z={s[2]} is not in region {label.source}")
    return scattering_green(stack, omega, r, s, f, sreg, quad=quad, **kw)
