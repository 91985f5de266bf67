"""Finite-volume laboratory for spectral-shift and eigenvalue-count bounds.

Discretizes Dirichlet Schrodinger operators with alloy-type random potentials
to finite symmetric matrices and verifies, at desk scale, the exact identities
and scaling bounds that govern them: semigroup singular-value decay, the
spectral shift curve with its trace identity and invariance, window-count
(Wegner) estimates against the coupling measure's modulus of continuity,
Holder continuity of the integrated density of states, partial integration
for singular measures, and Weyl-type eigenvalue lower bounds.
"""

from ._version import __version__
from .config import ExperimentConfig, KINDS, load_config, parse_config, validate_config
from .disorder import (DisorderDistribution, atomic_mixture, bernoulli, cantor,
                       coupling_stream, from_cdf_table, point_mass,
                       sample_couplings, uniform)
from .errors import ConfigParseError, ConfigValidationError, DenseCapError
from .lattice import (Domain, LatticeOperator, SingleSitePotential,
                      alloy_potential, assemble_operator, build_box_domain,
                      build_masked_domain, cell_indicator, center_site,
                      delete_sites, refine_domain, uniform_field_phases)
from .runner import RunResult, execute, payload_hash, run_experiment, write_record
from .spectral import (DecayFit, SpectralData, counting_function,
                       eigen_decompose, fit_decay, semigroup, singular_values,
                       trace_function)
from .ssf import (DualBoundFit, FtFunctional, SSFCurve, SwitchFunction,
                  TraceBoundReport, dual_bound_check, exp_pair_curve,
                  ft_closed_form, ft_eval, krein_check, legendre_dual,
                  majorization_check, make_switch, rectangle_row,
                  ssf_counting, ssf_integral_bound, ssf_via_invariance,
                  switch_derivative_row, trace_bound_check)
from .wegner import (HolderReport, IDSCurve, IDSReport, SemigroupTraceReport,
                     SingularDecayReport, WegnerConfig, WegnerResult,
                     WeylLevel, WeylReport, holder_modulus_check, ids_estimate,
                     partial_integration_check, random_monotone_function,
                     semigroup_trace_check, singular_value_experiment,
                     wegner_experiment, weyl_check)

__all__ = [
    "__version__",
    # config and running
    "ExperimentConfig", "KINDS", "load_config", "parse_config",
    "validate_config", "RunResult", "execute", "payload_hash",
    "run_experiment", "write_record",
    # errors
    "ConfigParseError", "ConfigValidationError", "DenseCapError",
    # lattice
    "Domain", "LatticeOperator", "SingleSitePotential", "alloy_potential",
    "assemble_operator", "build_box_domain", "build_masked_domain",
    "cell_indicator", "center_site", "delete_sites", "refine_domain",
    "uniform_field_phases",
    # disorder
    "DisorderDistribution", "atomic_mixture", "bernoulli", "cantor",
    "coupling_stream", "from_cdf_table", "point_mass", "sample_couplings",
    "uniform",
    # spectral
    "DecayFit", "SpectralData", "counting_function", "eigen_decompose",
    "fit_decay", "semigroup", "singular_values", "trace_function",
    # spectral shift
    "DualBoundFit", "FtFunctional", "SSFCurve", "SwitchFunction",
    "TraceBoundReport", "dual_bound_check", "exp_pair_curve",
    "ft_closed_form", "ft_eval", "krein_check", "legendre_dual",
    "majorization_check", "make_switch", "rectangle_row", "ssf_counting",
    "ssf_integral_bound", "ssf_via_invariance", "switch_derivative_row",
    "trace_bound_check",
    # disorder experiments and deterministic checks
    "HolderReport", "IDSCurve", "IDSReport", "SemigroupTraceReport",
    "SingularDecayReport", "WegnerConfig", "WegnerResult", "WeylLevel",
    "WeylReport", "holder_modulus_check", "ids_estimate",
    "partial_integration_check", "random_monotone_function",
    "semigroup_trace_check", "singular_value_experiment", "wegner_experiment",
    "weyl_check",
]
