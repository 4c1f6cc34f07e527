"""Low-complexity 8-point DCT approximations in the Feig-Winograd subspace."""

from .fwcore import (KNOWN_TRANSFORMS, KnownTransform, exact_dct, fast_forward, fw_map,
                     k_matrix, known_transform, structural_matrices)
from .inversion import (InverseParams, NotInvertibleError, inverse_matrix, inverse_params,
                        invertibility, low_complexity_inverse)
from .metrics import (MarkovModel, ObjectiveVector, addition_count, markov_covariance, mse,
                      objective_vector, shift_count, total_error_energy, transform_efficiency,
                      unified_coding_gain)
from .ortho import (Approximation, deviation_from_diagonality, diagonality_condition,
                    make_approximation, near_ortho_scaling, polar_scaling)
from .rational import ExactMatrix, ParamVector

__version__ = "0.1.0"
