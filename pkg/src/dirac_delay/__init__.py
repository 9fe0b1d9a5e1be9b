"""Forward and inverse spectral problems for Dirac-type systems with a constant delay a >= pi/2."""

from .contour import LocalizationError
from .core import (DelayConfig, GeneralPotentialMatrix, InvalidInputError, KernelPair, PotentialPair,
                   Spectrum, l2_norm_potential, l2_sequence_distance, potential_distance)
from .forward import (eval_char, eval_char_derivative, find_eigenvalues, general_char_functions,
                      kernels_to_char, potentials_to_kernels, spectra_of)
from .inverse import (IllConditionedBasisError, SubspectrumSpec, kernels_to_potentials,
                      reconstruct_from_m_subspectra, reconstruct_from_spectra)
from .products import check_type_condition, eval_product, spectra_to_char
from .stability import run_stability_trials

__version__ = "0.1.0"
