from .family_schema import (RegimeTag, REGIME_TAGS, ParetoLike, LomaxLike, WeibullLike, ExponentialFamily,
                            HeavyBase, TiltedHeavy, LatticePMF, UserAnalytic, ConfigTailFamily, TailFamily,
                            Finding)
from .result_schema import (CramerSolution, IntermediateSolution, HeavyIIContext, NewtonResult, PrefactorV,
                            AsymptoticEstimate, RNGSpec, SimResult, PassageSimulation, LatticeWalk,
                            ExactDistribution, SequenceDiagnostic, ExpansionFit, TailRatioDiagnostic)
from .config_schema import (ModelBlock, MG1Block, SequenceBlock, ToleranceConfig, OutputConfig, RunConfig,
                            Question, BuiltinSequence)
