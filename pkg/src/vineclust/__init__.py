"""Regular-vine copula selection for high-dimensional data.

The variables are first split into connected components along a graphical
Lasso screening path; sparse vines are fitted per component and the pieces
are merged and joined into one R-vine.
"""
from .copula import (DEFAULT_FAMILIES, FitError, FitResult, Family, PairCopula,
                     fit_pair_copula_mle, independence_test, kendall_tau, make_copula,
                     pair_density_h, select_pair_copula, tau_to_parameter)
from .glasso import (GlassoPath, glasso_fit, glasso_path, sample_covariance, screening_graph,
                     select_partition, to_z_scale)
from .graphs import UndirectedGraph, connected_components, max_spanning_tree, separates
from .rvine import (CopulaSample, RVineModel, RVineStructureError, count_parameters,
                    information_criteria, load_model, rvine_loglik, rvine_simulate,
                    save_model, truncate, validate_rvine_matrix)
from .select import (FitTrace, SelectionConfig, dissmann_select, fill_between_components,
                     merge_subvines, rvine_cluster_select, sector_concentration,
                     select_component_rvine)

__version__ = "0.1.0"
