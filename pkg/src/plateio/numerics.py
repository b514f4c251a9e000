"""Special functions, branch handling, spectral quadrature and complex roots.

Everything here is a pure function of its inputs.

Bessel crossover constants
--------------------------
``bessel_j`` uses three evaluation routes chosen per argument:

* ascending power series for ``x < SERIES_MAX`` (2.0),
* Hankel asymptotic expansion for ``x >= max(ASYMPTOTIC_MIN, n**2)``
  (ASYMPTOTIC_MIN = 25.0),
* Miller's downward recurrence, normalised with
  ``J_0 + 2 * sum(J_2k) = 1``, everywhere in between.
"""

import heapq
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergence
from .units import SI

SERIES_MAX = 2.0
ASYMPTOTIC_MIN = 25.0

_RESCALE = 1e250


# ---------------------------------------------------------------------------
# Bessel functions of the first kind
# ---------------------------------------------------------------------------

def _series(n, x):
    # J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (n+k)!)
    x = np.asarray(x, dtype=float)
    half = 0.5 * x
    term = np.power(half, n) / math.factorial(n)
    total = term.copy()
    q = -half * half
    for k in range(1, 60):
        term = term * q / (k * (n + k))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _hankel_asymptotic(n, x):
    x = np.asarray(x, dtype=float)
    mu = 4.0 * n * n
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 40):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        # stop each element at its smallest term (optimal truncation)
        active &= mag < prev
        contrib = np.where(active, term, 0.0)
        if k % 2 == 1:
            q = q + (-1) ** ((k - 1) // 2) * contrib
        else:
            p = p + (-1) ** (k // 2) * contrib
        prev = mag
        if not np.any(active & (mag > 1e-18)):
            break
    chi = x - (0.5 * n + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _miller_start(n_top, xmax):
    m = max(n_top, int(xmax)) + 20 + int(math.sqrt(60.0 * max(n_top, xmax, 1.0)))
    return m + (m % 2)


def _miller_all(n_max, x):
    """All orders J_0..J_n_max by downward recurrence; x must be > 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    if x.size == 0:
        return out
    m = _miller_start(n_max + 1, float(np.max(x)))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    two_over_x = 2.0 / x
    for k in range(m, 0, -1):
        # j_cur holds J_k (unnormalised); produce J_{k-1}
        if k <= n_max:
            out[k] = j_cur
        if k % 2 == 0:
            norm = norm + 2.0 * j_cur
        j_prev = k * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            j_cur = j_cur * scale
            j_next = j_next * scale
            norm = norm * scale
            out *= scale
    out[0] = j_cur
    norm = norm + j_cur
    return out / norm


def bessel_j(n, x):
    """Bessel function of the first kind and its derivative.

    Parameters
    ----------
    n : int
        Order, ``n >= 0``.
    x : float or array_like
        Argument(s), ``x >= 0``.

    Returns
    -------
    (J, dJ) : tuple of float or ndarray
        ``J_n(x)`` and ``J_n'(x)``, with the shape of ``x``.
    """
    n = int(n)
    if n < 0:
        raise DomainError(f"Bessel order must be >= 0, got {n}")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if not np.all(np.isfinite(xa)):
        raise DomainError("Bessel argument must be finite")
    if np.any(xa < 0):
        raise DomainError("Bessel argument must be >= 0")

    orders = (n - 1, n, n + 1) if n > 0 else (0, 1)
    vals = {o: np.zeros_like(xa) for o in orders}

    small = xa < SERIES_MAX
    large = xa >= max(ASYMPTOTIC_MIN, float((n + 1) ** 2))
    mid = ~(small | large)
    for o in orders:
        if np.any(small):
            vals[o][small] = _series(o, xa[small])
        if np.any(large):
            vals[o][large] = _hankel_asymptotic(o, xa[large])
    if np.any(mid):
        table = _miller_all(n + 1, xa[mid])
        for o in orders:
            vals[o][mid] = table[o]

    j = vals[n]
    if n == 0:
        dj = -vals[1]
    else:
        dj = 0.5 * (vals[n - 1] - vals[n + 1])
    if scalar:
        return float(j[0]), float(dj[0])
    return j, dj


def bessel_j_orders(n_max, x):
    """``J_n(x)`` and ``J_n'(x)`` for every ``n = 0..n_max`` at once.

    Returns two arrays of shape ``(n_max + 1,) + x.shape``.  Used by the
    azimuthal sums, where all orders are needed at the same arguments.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0):
        raise DomainError("Bessel argument must be >= 0")
    top = n_max + 1
    table = np.zeros((top + 1,) + xa.shape)
    small = xa < SERIES_MAX
    big = ~small
    if np.any(small):
        for o in range(top + 1):
            table[o][small] = _series(o, xa[small])
    if np.any(big):
        table[:, big] = _miller_all(top, xa[big])
    j = table[: n_max + 1]
    dj = np.empty_like(j)
    dj[0] = -table[1]
    if n_max >= 1:
        dj[1:] = 0.5 * (table[0:n_max] - table[2 : n_max + 2])
    return j, dj


# ---------------------------------------------------------------------------
# Branch of the axial wavenumber
# ---------------------------------------------------------------------------

def wavenumber(eps, omega, c=SI.c):
    """Complex wavenumber ``k = sqrt(eps) * omega / c`` with ``Im k >= 0``."""
    k = np.sqrt(np.asarray(eps, dtype=complex)) * (omega / c)
    return k


def axial_wavenumber(eps, omega, lam, c=SI.c):
    """``h = sqrt(k**2 - lam**2)`` on the branch ``Im h >= 0``.

    Where ``Im h == 0`` the root with ``Re h >= 0`` is taken.  ``lam`` may be
    real or complex (complex values are used by the pole search).
    """
    if np.any(np.asarray(omega) <= 0):
        raise DomainError("omega must be positive")
    k2 = np.asarray(eps, dtype=complex) * (omega / c) ** 2
    lam = np.asarray(lam)
    h = np.sqrt(k2 - lam * lam)
    flip = (h.imag < 0) | ((h.imag == 0) & (h.real < 0))
    h = np.where(flip, -h, h)
    if h.ndim == 0:
        return complex(h)
    return h


# ---------------------------------------------------------------------------
# Spectral quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for :func:`integrate_spectral`.

    ``lambda_max`` of ``None`` means "choose from the wavenumbers of the
    problem" (20 x the largest |k|); callers resolve it with
    :meth:`resolved`.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-300
    max_subdivisions: int = 4000
    lambda_max: float | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.lambda_max is not None and not self.lambda_max > 0:
            raise ValueError("lambda_max must be positive")

    def resolved(self, kmax):
        if self.lambda_max is not None:
            return self
        return QuadratureSpec(self.rel_tol, self.abs_tol, self.max_subdivisions,
                              20.0 * float(kmax))


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])            # 15 ascending nodes
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[1:14:2] = np.concatenate([_WG[:-1], _WG[::-1]])


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u)


class _Segment:
    __slots__ = ("a", "b", "mapped")

    def __init__(self, a, b, mapped):
        self.a, self.b, self.mapped = a, b, mapped

    def nodes(self, lo, hi):
        """Physical abscissae and Jacobian-folded weights for [lo, hi] in u."""
        half = 0.5 * (hi - lo)
        u = 0.5 * (hi + lo) + half * _NODES
        if self.mapped:
            s, ds = _smoothstep(u)
            lam = self.a + (self.b - self.a) * s
            jac = (self.b - self.a) * ds * half
        else:
            lam = self.a + (self.b - self.a) * u
            jac = np.full(15, (self.b - self.a) * half)
        return lam, jac


def _norm(v):
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def integrate_spectral(f, spec, breakpoints=(), full_output=False):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[0, spec.lambda_max]``.

    ``f`` receives a 1-D array of abscissae and must return an array whose
    leading axis matches it (trailing axes are integrated component-wise).
    ``breakpoints`` are forced subdivision points, normally the real parts
    |k_j| of the branch points of the integrand.  Segments ending on a
    breakpoint are integrated in a smoothstep variable whose Jacobian
    vanishes at both ends, which removes inverse-square-root endpoint
    singularities.

    The exponential tail beyond ``lambda_max`` is estimated from the decay
    of ``f`` near the cut-off and added to the error bound (not to the
    value).

    Returns
    -------
    (value, error) or (value, error, info)
        ``info`` holds ``neval``, ``intervals`` and ``tail``.

    Raises
    ------
    NonConvergence
        If the subdivision budget is exhausted before the tolerance is met.
    """
    lam_max = spec.lambda_max
    if lam_max is None:
        raise ValueError("QuadratureSpec.lambda_max must be resolved before integrating")
    cuts = sorted({float(p) for p in breakpoints if 0.0 < float(p) < lam_max})
    edges = [0.0] + cuts + [lam_max]
    segments = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 1e-14 * lam_max:
            continue
        mapped = (a in cuts) or (b in cuts)
        segments.append(_Segment(a, b, mapped))

    neval = 0

    def evaluate(batch):
        nonlocal neval
        lams, jacs = [], []
        for seg, lo, hi in batch:
            lam, jac = seg.nodes(lo, hi)
            lams.append(lam)
            jacs.append(jac)
        lam = np.concatenate(lams)
        vals = np.asarray(f(lam))
        neval += lam.size
        tail_shape = vals.shape[1:]
        vals = vals.reshape((len(batch), 15) + tail_shape)
        jac = np.stack(jacs).reshape((len(batch), 15) + (1,) * len(tail_shape))
        weighted = vals * jac
        kron = np.tensordot(_KW, weighted, axes=([0], [1]))
        gauss = np.tensordot(_GW, weighted, axes=([0], [1]))
        # tensordot moves the batch axis first
        return kron, gauss

    # heap of (-err, counter, seg_index, lo, hi, value)
    first = [(seg, 0.0, 1.0) for seg in segments]
    kron, gauss = evaluate(first)
    heap = []
    counter = 0
    total = 0
    done_value = 0
    done_err = 0.0
    for i, (seg, lo, hi) in enumerate(first):
        err = _norm(kron[i] - gauss[i])
        heap.append((-err, counter, seg, lo, hi, kron[i]))
        counter += 1
    heapq.heapify(heap)

    def current():
        val = done_value + sum(item[5] for item in heap)
        err = done_err + sum(-item[0] for item in heap)
        return val, err

    value, err = current()
    n_intervals = len(heap)
    while True:
        tol = max(spec.abs_tol, spec.rel_tol * _norm(value))
        if err <= tol or not heap:
            break
        if n_intervals >= spec.max_subdivisions:
            raise NonConvergence(
                f"spectral quadrature did not reach tolerance {tol:.3e} "
                f"within {spec.max_subdivisions} subintervals (error {err:.3e})",
                estimate=value, error=err)
        # split every interval carrying more than its share of the budget
        share = tol / max(n_intervals, 1)
        picked = []
        while heap and len(picked) < 64:
            item = heap[0]
            if picked and -item[0] <= share:
                break
            picked.append(heapq.heappop(heap))
        batch = []
        for item in picked:
            _, _, seg, lo, hi, val = item
            mid = 0.5 * (lo + hi)
            if hi - lo < 1e-13:
                # cannot split further; freeze it
                done_value = done_value + val
                done_err += -item[0]
                continue
            batch.append((seg, lo, mid))
            batch.append((seg, mid, hi))
        if batch:
            kron, gauss = evaluate(batch)
            for i, (seg, lo, hi) in enumerate(batch):
                e = _norm(kron[i] - gauss[i])
                heapq.heappush(heap, (-e, counter, seg, lo, hi, kron[i]))
                counter += 1
            n_intervals += len(batch) // 2
        value, err = current()

    tail = _tail_estimate(f, lam_max)
    neval += 2
    err_total = err + tail
    if tail > max(spec.abs_tol, spec.rel_tol * _norm(value)):
        warnings.warn(
            f"spectral tail beyond lambda_max={lam_max:.3e} estimated at {tail:.3e}; "
            "consider a larger lambda_max", RuntimeWarning, stacklevel=2)
    if np.ndim(value) == 0:
        value = complex(value)
    if full_output:
        return value, err_total, {"neval": neval, "intervals": n_intervals, "tail": tail}
    return value, err_total


def _tail_estimate(f, lam_max):
    probe = np.array([0.95 * lam_max, lam_max])
    vals = np.asarray(f(probe))
    f_in = _norm(vals[0])
    f_end = _norm(vals[1])
    if f_end == 0.0:
        return 0.0
    if f_in > f_end:
        rate = math.log(f_in / f_end) / (0.05 * lam_max)
        return f_end / rate
    return f_end * lam_max


# ---------------------------------------------------------------------------
# Complex roots
# ---------------------------------------------------------------------------

def find_root_complex(f, seed, tol=1e-12, max_iter=100, step=None):
    """Damped Newton iteration for an analytic ``f`` started at ``seed``.

    The derivative is a central difference with step ``step`` (default
    ``1e-7 * max(|z|, 1)``).  A Newton step that does not decrease ``|f|``
    is halved up to 40 times.

    Raises
    ------
    NonConvergence
        If ``|f(z)| < tol`` is not reached in ``max_iter`` iterations.
    """
    z = complex(seed)
    fz = complex(f(z))
    for _ in range(max_iter):
        if abs(fz) < tol:
            return z
        d = step if step is not None else 1e-7 * max(abs(z), 1.0)
        dfz = (complex(f(z + d)) - complex(f(z - d))) / (2 * d)
        if dfz == 0:
            break
        delta = -fz / dfz
        for _ in range(40):
            z_new = z + delta
            f_new = complex(f(z_new))
            if abs(f_new) < abs(fz):
                break
            delta *= 0.5
        else:
            break
        if z_new == z:
            z, fz = z_new, f_new
            break
        z, fz = z_new, f_new
    if abs(fz) < tol:
        return z
    raise NonConvergence(f"Newton iteration stalled at z={z!r} with |f|={abs(fz):.3e}",
                         estimate=z, error=abs(fz))


def winding_number(f, re_min, re_max, im_min, im_max, min_points=64, max_points=2 ** 16):
    """Number of zeros minus poles of ``f`` inside a rectangle.

    The phase of ``f`` is tracked along the boundary (counter-clockwise)
    and the sampling is refined until no step changes the phase by more
    than pi/4.

    Raises
    ------
    ValueError
        If ``f`` vanishes on the boundary or the phase cannot be resolved.
    """
    corners = [complex(re_min, im_min), complex(re_max, im_min),
               complex(re_max, im_max), complex(re_min, im_max)]
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        total += _edge_phase(f, a, b, min_points, max_points)
    return int(round(total / (2 * np.pi)))


def _edge_phase(f, a, b, n, max_points):
    t = np.linspace(0.0, 1.0, n + 1)
    z = a + (b - a) * t
    vals = np.array([complex(f(zi)) for zi in z])
    while True:
        if np.any(vals == 0):
            raise ValueError("function vanishes on the contour")
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) > np.pi / 4
        if not np.any(bad):
            return float(np.sum(dphi))
        if t.size > max_points:
            raise ValueError("contour phase could not be resolved; the window "
                             "may straddle a zero or a branch cut")
        mids = 0.5 * (t[:-1] + t[1:])[bad]
        new_vals = np.array([complex(f(a + (b - a) * m)) for m in mids])
        t = np.concatenate([t, mids])
        vals = np.concatenate([vals, new_vals])
        order = np.argsort(t)
        t, vals = t[order], vals[order]
