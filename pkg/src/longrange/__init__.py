"""Numerical laboratory for long-range lattice models.

Exact and Monte Carlo two-point functions for heavy-tailed step
distributions: kernel construction and verification, random-walk Green's
functions with near-critical crossover bounds, self-avoiding-walk
enumeration with the convolution-identity round trip, long-range percolation
cluster sampling, and Bochner-Riesz windowed sums.
"""

__version__ = "0.1.0"

from .lattice import (Box, Field, LatticeError, convolve, convolve_direct,
                      delta_field, fourier, inverse_fourier, is_symmetric,
                      load_field, load_field_csv, make_box, reflect,
                      save_field, save_field_csv, symmetrize, zero_field)
from .kernels import (AssumptionReport, KernelError, KernelSpec,
                      StepDistribution, build_kernel, check_assumption,
                      ising_transform, nnnorm, truncate_kernel)
from .greens import (CrossoverProfile, GreensError, GreensFunction,
                     HeatKernelTable, bound_pieces, check_upper_bound,
                     crossover_profile, crossover_scale, footnote_lower_bound,
                     greens, greens_fourier, greens_series, heat_iterates,
                     profile_to_csv, walk_scale, wrap_horizon)
from .lace import (BootstrapEvaluation, LaceData, LaceError, bootstrap_b,
                   build_tilde_D, conv_bound_check, envelope_field,
                   neumann_inverse, pi_from_inverse, renewal_defect,
                   susceptibility, verify_identity)
from .saw import (SawEnumeration, SawError, check_pi_decay, enumerate_saw,
                  extract_pi)
from .percolation import (PercConfig, PercError, TwoPointEstimate,
                          crossover_fit, estimate_two_point, estimates_to_csv,
                          nesting_check, sample_cluster)
from .riesz import (RieszError, RieszEvaluation, bochner_riesz,
                    critical_sum_demo, default_alpha_BR, demo_to_csv,
                    verify_convergence)
