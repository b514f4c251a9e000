"""Input-output relations and Green tensors of absorbing planar layer stacks."""

from .errors import (DegenerateError, DomainError, IllPosedError, NonConvergence,
                     RegionMismatchError)
from .green import (GreenPartLabel, free_green, green_part, scattering_green,
                    total_green)
from .iorel import (BalanceResult, ModeCoefficients, NoiseKernelSet, SurfacePole,
                    energy_balance, field_kernel, find_surface_poles, mode_coefficients,
                    noise_amplitude, noise_kernels, reflection_coeff, transmission_coeff)
from .media import ConstantComplex, DrudeLorentz, Oscillator, permittivity
from .numerics import (QuadratureSpec, bessel_j, find_root_complex, integrate_spectral,
                       winding_number)
from .stack import (Layer, LayerStack, ModalSolver, interface_fresnel,
                    scattering_coefficients, slab_rt)
from .units import NATURAL, SI
from .waves import EVEN, ODD, TE, TM, CylPoint, ModeIndex, vector_wave_M, vector_wave_N

__version__ = "0.1.0"
