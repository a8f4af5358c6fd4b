"""monofit: monotone polynomial approximation on [-1,1] with
endpoint-interpolatory pointwise error bounds, and an empirical
verification harness for the underlying inequalities."""

from .errors import CalibrationFailed, HypothesisViolation, NeedsLargerN
from .monotone import (ApproxConfig, CalibrationConstants, approximate,
                       calibrate, classify, correction_poly, decompose,
                       default_constants, monotone_projection,
                       small_derivative_poly)
from .partition import (ChebPartition, GridSpec, PointMetrics, build_partition,
                        hull, locate, metrics, verify_partition_inequalities)
from .polynomials import (ChebSeries, KernelPoly, SumPoly, cheb_arith,
                          cheb_calculus, cheb_eval, check_monotone,
                          gauss_integrate)
from .smoothness import (Majorant, SmoothFunction, compose_phi,
                         finite_difference, modulus, star_majorant)
from .splines import (Spline, b_ij, b_k_max, endpoint_floors,
                      monotone_spline_fit, verify_lemma_5_1, verify_lemma_5_2)
from .unity import UnityBasis, build_unity, simultaneous_approximant

__version__ = "0.1.0"
