"""Cylindrical TE (M) and TM (N) vector wave functions.

With ``x = lam * r`` and the parity selector (upper entry even, lower odd)::

    M(r, h) = [ -+ n J_n(x)/r {sin|cos}(n psi) e_r
                 -  dJ_n(x)/dr {cos|sin}(n psi) e_psi ] exp(i h z)

    N(r, h) = (1/k) [ i h dJ_n(x)/dr {cos|sin}(n psi) e_r
                      -+ i h n J_n(x)/r {sin|cos}(n psi) e_psi
                      + lam**2 J_n(x) {cos|sin}(n psi) e_z ] exp(i h z)

so that ``N = curl(M) / k`` and ``M = curl(N) / k`` whenever
``h**2 + lam**2 = k**2``.  Components are returned in the cylindrical
frame ``(e_r, e_psi, e_z)``; :func:`to_cartesian` rotates them.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError
from .numerics import bessel_j

EVEN = "even"
ODD = "odd"
TE = "TE"
TM = "TM"


@dataclass(frozen=True)
class ModeIndex:
    """Label of one spectral channel.

    ``direction`` is the sign applied to the axial wavenumber, i.e. the
    mode varies as ``exp(i * direction * h * z)``.
    """

    omega: float
    lam: float
    n: int = 0
    parity: str = EVEN
    polarization: str = TE
    direction: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("transverse wavenumber must be >= 0")
        if self.n < 0:
            raise ValueError("azimuthal order must be >= 0")
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.polarization not in (TE, TM):
            raise ValueError(f"polarization must be 'TE' or 'TM', got {self.polarization!r}")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")


@dataclass(frozen=True)
class CylPoint:
    r: float
    psi: float
    z: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radial coordinate must be >= 0")

    @classmethod
    def from_cartesian(cls, x, y, z):
        return cls(float(np.hypot(x, y)), float(np.arctan2(y, x)), float(z))


def _radial(n, lam, r, J=None, dJ=None):
    """Return J_n(lam r), n J_n(lam r)/r and dJ_n(lam r)/dr with axis limits."""
    lam = np.asarray(lam, dtype=float)
    x = lam * r
    if J is None:
        J, dJ = bessel_j(n, x)
    J = np.asarray(J, dtype=float)
    dJ = np.asarray(dJ, dtype=float)
    if n == 0:
        n_j_over_r = np.zeros_like(J)
    else:
        # n J_n(x)/r = n lam J_n(x)/x; J_n(x)/x -> 1/2 (n = 1) or 0 (n >= 2) as x -> 0
        limit = 0.5 if n == 1 else 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            j_over_x = np.where(x > 0, J / np.where(x > 0, x, 1.0), limit)
        n_j_over_r = n * lam * j_over_x
    return J, n_j_over_r, lam * dJ


def _angular(n, parity, psi):
    c, s = np.cos(n * psi), np.sin(n * psi)
    # (primary, secondary) = ({cos|sin}, {sin|cos}); sign = -+ factor
    if parity == EVEN:
        return c, s, -1.0
    return s, c, 1.0


def m_wave(n, parity, lam, h, r, psi, z, J=None, dJ=None):
    """Array form of M; ``lam`` and ``h`` broadcast, result has a trailing axis of 3."""
    J, njr, djr = _radial(n, lam, r, J, dJ)
    prim, sec, sign = _angular(n, parity, psi)
    phase = np.exp(1j * np.asarray(h) * z)
    e_r = sign * njr * sec * phase
    e_psi = -djr * prim * phase
    e_z = np.zeros_like(e_r)
    return np.stack(np.broadcast_arrays(e_r, e_psi, e_z), axis=-1)


def n_wave(n, parity, lam, h, k, r, psi, z, J=None, dJ=None):
    """Array form of N; ``lam``, ``h`` and ``k`` broadcast."""
    k = np.asarray(k, dtype=complex)
    if np.any(np.abs(k) < 1e-30):
        raise DegenerateError("wavenumber too small for the TM wave normalisation")
    J, njr, djr = _radial(n, lam, r, J, dJ)
    prim, sec, sign = _angular(n, parity, psi)
    h = np.asarray(h)
    lam = np.asarray(lam, dtype=float)
    pref = np.exp(1j * h * z) / k
    e_r = 1j * h * djr * prim * pref
    e_psi = sign * 1j * h * njr * sec * pref
    e_z = lam * lam * J * prim * pref
    return np.stack(np.broadcast_arrays(e_r, e_psi, e_z), axis=-1)


def vector_wave_M(mode, h, p):
    """TE vector wave function at a cylindrical point.

    Parameters
    ----------
    mode : ModeIndex
        ``mode.direction`` multiplies ``h``.
    h : complex
        Axial wavenumber.
    p : CylPoint

    Returns
    -------
    ndarray of shape (3,)
        Cylindrical components ``(e_r, e_psi, e_z)``.
    """
    return m_wave(mode.n, mode.parity, mode.lam, mode.direction * h, p.r, p.psi, p.z)


def vector_wave_N(mode, h, k, p):
    """TM vector wave function at a cylindrical point (see :func:`vector_wave_M`)."""
    return n_wave(mode.n, mode.parity, mode.lam, mode.direction * h, k, p.r, p.psi, p.z)


def to_cartesian(vec, psi):
    """Rotate cylindrical components ``(..., 3)`` at azimuth ``psi`` to Cartesian."""
    vec = np.asarray(vec)
    c, s = np.cos(psi), np.sin(psi)
    vx = vec[..., 0] * c - vec[..., 1] * s
    vy = vec[..., 0] * s + vec[..., 1] * c
    return np.stack([vx, vy, vec[..., 2]], axis=-1)
