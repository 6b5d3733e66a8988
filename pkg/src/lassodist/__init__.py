"""Finite-sample distribution toolkit for the lasso estimator."""

from .cfalgebra import (CfQuery, DegenerateHyperplaneError, ExpansionSizeError,
                        GaussianSurrogate, SignPolicy, empirical_cf, gaussian_rhs_cf,
                        make_query, sign_expansion_cf, sign_expansion_terms,
                        signed_cf_term, slice_lhs_cf, slice_rhs_cf,
                        slice_term_gaussian, surrogate_for_component)
from .distributions import (InvalidLawError, LawKind, MarginalLaw, cdf_orthogonal,
                            conditional_cdf, ml_law, orthogonal_law, pdf, pdf_ml,
                            pdf_orthogonal, pdf_transformed, point_mass_zero,
                            transformed_law, transformed_law_for_component)
from .harness import (ConfigError, EmpiricalDistribution, ExclusionBudgetError,
                      ExperimentConfig, ExperimentReport, KsResult, cf_grid_compare,
                      default_u_grid, ks_distance, load_config, run_experiment,
                      write_report_files)
from .linmodel import (DimensionError, EnumerationCapError, MeasurementModel, ModelKind,
                       build_bernoulli_model, build_hadamard_model, rip_constant,
                       sample_measurement, sylvester_hadamard)
from .solver import (ConvergenceError, LassoSolution, kkt_check, soft_threshold,
                     solve_lasso)

__version__ = "0.1.0"
