import numpy as np


def rel_err(a, b):
    """Max-norm error of ``a`` relative to the max-norm of ``b``."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def tmm_rt(eps, thicknesses, k0, lam, pol, dps=30):
    """Characteristic-matrix oracle in extended precision.

    ``eps`` lists every region from I to III, ``thicknesses`` the inner
    layers.  Returns surface-referenced ``(r, t)`` for incidence from the
    first region, with TM amplitudes normalised like N waves (the magnetic
    amplitude divided by the wavenumber).
    """
    import mpmath

    with mpmath.workdps(dps):
        k0 = mpmath.mpf(k0)
        lam = mpmath.mpf(lam)

        def h_of(e):
            h = mpmath.sqrt(mpmath.mpc(e) * k0 ** 2 - lam ** 2)
            if mpmath.im(h) < 0 or (mpmath.im(h) == 0 and mpmath.re(h) < 0):
                h = -h
            return h

        def q_of(e):
            h = h_of(e)
            return h if pol == "TE" else h / mpmath.mpc(e)

        m = mpmath.matrix([[1, 0], [0, 1]])
        for e, d in zip(eps[1:-1], thicknesses):
            h, q = h_of(e), q_of(e)
            c, s = mpmath.cos(h * d), mpmath.sin(h * d)
            m = m * mpmath.matrix([[c, -1j * s / q], [-1j * q * s, c]])
        q1, qs = q_of(eps[0]), q_of(eps[-1])
        b = m[0, 0] + m[0, 1] * qs
        c = m[1, 0] + m[1, 1] * qs
        r = (b * q1 - c) / (b * q1 + c)
        t = 2 * q1 / (b * q1 + c)
        if pol == "TM":
            t = t * mpmath.sqrt(mpmath.mpc(eps[0])) / mpmath.sqrt(mpmath.mpc(eps[-1]))
        return complex(r), complex(t)
