"""Complex, frequency-dependent permittivity models."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .numerics import wavenumber
from .units import SI


@dataclass(frozen=True)
class Oscillator:
    """One Lorentz term ``omega_p**2 / (omega_0**2 - omega**2 - i gamma omega)``.

    ``omega_0 = 0`` gives a Drude (free-carrier) term.
    """

    omega_p: float
    omega_0: float
    gamma: float

    def __post_init__(self):
        if self.omega_p < 0:
            raise ValueError("plasma frequency must be >= 0")
        if self.omega_0 < 0:
            raise ValueError("resonance frequency must be >= 0")
        if not self.gamma > 0:
            raise ValueError("damping must be > 0 for a passive oscillator")


@dataclass(frozen=True)
class ConstantComplex:
    eps: complex

    def __post_init__(self):
        object.__setattr__(self, "eps", complex(self.eps))
        if self.eps.imag < 0:
            raise ValueError(f"Im(eps) must be >= 0 for a passive medium, got {self.eps}")

    kind = "constant"


@dataclass(frozen=True)
class DrudeLorentz:
    eps_inf: float
    oscillators: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "oscillators", tuple(self.oscillators))
        for osc in self.oscillators:
            if not isinstance(osc, Oscillator):
                raise TypeError("oscillators must be Oscillator instances")

    kind = "drude_lorentz"


def permittivity(model, omega):
    """Complex relative permittivity of ``model`` at angular frequency ``omega``.

    ``omega`` may be an array; the result then has its shape.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise DomainError("omega must be positive")
    if isinstance(model, ConstantComplex):
        out = np.full(w.shape, model.eps, dtype=complex)
    elif isinstance(model, DrudeLorentz):
        out = np.full(w.shape, complex(model.eps_inf))
        for osc in model.oscillators:
            out = out + osc.omega_p ** 2 / (osc.omega_0 ** 2 - w * w - 1j * osc.gamma * w)
    else:
        raise TypeError(f"unsupported dispersion model {model!r}")
    if out.ndim == 0:
        return complex(out)
    return out


def medium_wavenumber(model, omega, units=SI):
    """``k = sqrt(eps(omega)) omega / c`` on the branch ``Im k >= 0``."""
    return wavenumber(permittivity(model, omega), omega, units.c)


def is_lossless(model, omega):
    return bool(np.all(np.imag(permittivity(model, omega)) == 0.0))


VACUUM = ConstantComplex(1.0)
