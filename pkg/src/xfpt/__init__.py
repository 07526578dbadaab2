"""Extreme first passage time statistics for random walks on finite networks.

Three routes to the law of the k-th fastest of N searchers:

* :mod:`xfpt.geodesic` and :mod:`xfpt.asymptotics` give the large-N limit
  from the optimal paths alone;
* :mod:`xfpt.exact` evaluates the finite-N law of Markov networks;
* :mod:`xfpt.montecarlo` simulates it, for Markov and general waiting times.

:mod:`xfpt.mortal` treats searchers with exponential lifetimes and
:mod:`xfpt.ensembles` builds random test instances.
"""
__version__ = "0.1.0"

from .errors import ModeError, NumericalError, SimulationError, ValidationError, XfptError
from .network import (
    Exponential,
    Lomax,
    Mode,
    Network,
    Query,
    ShiftedStretched,
    ValidationReport,
    WaitingSpec,
    as_general,
    max_rate,
    validate,
)
from .geodesic import (
    GeodesicSummary,
    PathRecord,
    brute_force_lambda,
    enumerate_optimal_paths,
    geodesic_summary,
)
from .asymptotics import (
    ExtremeLaw,
    MomentReport,
    asymptotic_moment,
    convolution_coefficient,
    extreme_law,
    regime_threshold,
    short_time_coefficient,
)
from .exact import (
    ExactSolver,
    SurvivalCurve,
    extreme_cdf,
    extreme_moment_exact,
    extreme_pdf,
    extreme_sf,
    fpt_density,
    survival,
    survival_curve,
)
from .montecarlo import (
    McEstimate,
    SimConfig,
    estimate_fpt,
    sample_conditional_mortal,
    sample_extreme,
    sample_fpt,
    sample_fpts,
)
from .mortal import MortalQuery, conditional_moment_asymptotic, conditional_moment_exact
from .ensembles import EnsembleSpec, SweepResult, convergence_sweep, generate, hop_distances
from .io import graph_from_dict, graph_to_dict, load_graph, save_graph
from . import builders
