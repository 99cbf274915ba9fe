"""Quantum noise correlators for weak, memory-filtered measurement records.

The measured record of a weakly coupled detector is the symmetrized part of
the system observable plus a kernel-weighted commutator part,

    A_w(t) = A_c(t) + (1/2) integral dt' f(t - t') A_q(t'),

and every choice of the memory kernel f selects an operator ordering of the
underlying correlation functions: f = 0 gives symmetrized noise, the
equilibrium kernel at detector temperature T_d gives noise a thermal
detector actually absorbs (exactly zero when the system sits at T = T_d),
and the T_d = 0 limit selects pure emission.  The package computes these
correlators exactly for small systems (line spectra and a time-domain
grid), checks the fluctuation-dissipation and no-information identities,
exposes the equivalent ladder-operator quasiprobability orderings, applies
the machinery to the AC-driven tunnel junction's squeezing inequality, and
simulates the finite-coupling Gaussian detector POVM whose weak limit
recovers it all.
"""

__version__ = "0.1.0"

from .hilbert import (Operator, DensityMatrix, EigenSystem, eigensystem,
                      thermal_state, evolve_heisenberg, expectation,
                      sigma_x, sigma_y, sigma_z, identity,
                      tls_hamiltonian, tls_thermal)
from .kernel import (MemoryKernel, markovian, equilibrium, tabulated,
                     f_omega, f_time, calibration_residual, solve_kernel)
from .correlator import (LineSpectrum, lehmann_spectrum, weak_spectrum,
                         fdt_residual, fdt_max_residual,
                         WeakCorrelatorRequest, weak_correlator_grid,
                         tls_equal_time_variance, tls_variance_asymptote)
from .oscillator import (FockSpace, coherent_state, squeezed_vacuum,
                         thermal_osc, quasi_moment, weak_moment,
                         weak_pair_correlator, time_order_invariance,
                         x_variance, x_variance_p_ordered)
from .junction import (JunctionConfig, w, dc_noise, pat_weight,
                       SqueezingReport, squeezing_report, fig1_scan)
from .povm import (DetectorGrid, MeasurementPlan, joint_outcomes,
                   completeness_defect, kraus_apply, weak_reference,
                   finite_eta_correlator, sample_outcomes, sample_records,
                   expansion_check)
from ._grid import GRID_BACKEND
