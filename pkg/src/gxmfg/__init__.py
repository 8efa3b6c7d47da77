"""Learning equilibria of graphex mean field games on sparse power-law networks."""

from .games import CORE, GameModel, make_game, make_rs, make_sir, make_sis
from .graphex import (DegreeLaw, Graphex, SampledGraph, degree_law, estimate_sigma,
                      kernel_value, sample_graph, xi, xi_bar)
from .simulate import delta_mu, empirical_fields, evaluate, simulate
from .solver import Solution, mix_overall, solve, solve_core, solve_periphery

__version__ = "0.1.0"
