from .pareto_distribution import ParetoDistribution, LomaxDistribution
from .weibull_distribution import WeibullDistribution
from .exponential_distribution import ExponentialDistribution
from .tilted_heavy_distribution import TiltedHeavyDistribution
from .lattice_distribution import LatticeDistribution
from .user_analytic_distribution import UserAnalyticDistribution
from .compound_poisson_distribution import CompoundPoissonDistribution
