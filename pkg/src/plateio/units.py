"""Physical constants and the two supported unit systems.

``SI`` uses CODATA values from :mod:`scipy.constants`.  ``NATURAL`` sets
c = eps0 = hbar = 1 (and therefore mu0 = 1); it exists for cross-checks
where dimensionless numbers are easier to reason about.
"""

from dataclasses import dataclass

from scipy import constants as _const


@dataclass(frozen=True)
class UnitSystem:
    name: str
    c: float
    eps0: float
    mu0: float
    hbar: float


SI = UnitSystem(
    name="SI",
    c=_const.c,
    eps0=_const.epsilon_0,
    mu0=_const.mu_0,
    hbar=_const.hbar,
)

NATURAL = UnitSystem(name="natural", c=1.0, eps0=1.0, mu0=1.0, hbar=1.0)


def unit_system(name):
    """Look up a unit system by (case-insensitive) name."""
    key = str(name).lower()
    if key == "si":
        return SI
    if key == "natural":
        return NATURAL
    raise ValueError(f"unknown unit system {name!r}; expected 'SI' or 'natural'")
