from .types import (ParetoLike, LomaxLike, WeibullLike, ExponentialFamily, TiltedHeavy, LatticePMF, UserAnalytic,
                    RNGSpec, RunConfig)
from .models import IncrementModel, MG1Model, build_distribution, tail, mgf, induced_increment, sanity_check
from .cramer_engine import solve_tilt, solve_tilt_mg1, petrov_tail, solve_intermediate, intermediate_tail
from .heavy_engine import (heavy1_tail, compute_k, cramer_series, build_context, R_eval, eta, newton_y, heavy2_tail,
                           heavy2_first_iterate, weibull_expansion)
from .passage import v_subexp, v_cramer_mg1, v_rw_series, passage_tail_rw, passage_tail_levy, bp_tail
from .oracle import (lattice_walk_from_model, exact_sn_dist, passage_survival, exact_passage, min_functional_terms,
                     exact_min_functional, exact_e_nu)
from .mc import (spawn_generators, simulate_walk_passage, simulate_walk_passage_tilted, simulate_walk_sum_tail,
                 simulate_walk_sum_tail_conditional,
                 simulate_walk_nu_mean, tilted_min_functional_terms, simulate_bp, simulate_bp_tilted)
from .classcheck import ratio_test, conv_test, cond_ratio_test, classify, builtin_sequence
