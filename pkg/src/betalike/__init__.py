"""Posterior distributions of probabilities under reliability and count models."""

from .cumulants import (CumulantSet, MomentSet, cumulative_poisson_theta_moments,
                        moments_to_cumulants, poisson_regression_theta_moments,
                        poisson_theta_moments, sum_cumulants, weibull_waiting_cumulants)
from .dataset import (BinaryOutcomeData, CountData, QueryTarget, ReliabilityData,
                      load_binary_csv, load_count_csv, load_reliability_csv)
from .errors import (BetalikeError, ConvergenceError, ImproperPosteriorError,
                     ImproperPriorError, InfeasibleMomentsError, NumericalError,
                     ParseError, ValidationError)
from .evidence import (EvidenceReport, PriorRange, exponential_evidence_core,
                       model_posterior, weibull_evidence_core)
from .maxent import (MaxEntDensity, MixtureDensity, maxent_positive_density,
                     maxent_theta_density, poisson_like_pmf,
                     poisson_like_theta_distribution, solve_maxent)
from .posterior import (GridSpec, build_exponential, build_logistic, build_poisson,
                        build_poisson_regression, build_weibull)
from .quadrature import Grid1D, Grid2D, integrate_1d, marginalize, normalize_grid
from .theta import (ThetaDensity, exponential_theta_density, exponential_theta_mean,
                    logistic_theta_density, weibull_theta_density)

__version__ = "0.1.0"
