"""Epsilon-Nash equilibria for two-player stopping games whose payoff is
settled at the later of the two stopping times, on finite scenario trees."""

from .dynkin import DynkinSolution, evaluate_V, solve
from .envelopes import EnvelopeSet, anchored_value, build_envelopes, build_family, reaction_slack
from .equilibrium import (EquilibriumBundle, assemble_nonzero_sum, assemble_zero_sum, build_W,
                          choose_delta, hitting_mu, subgame_deviation_slack)
from .errors import ContractViolation, InstanceError
from .filtration import (AdaptedProcess, FilteredTree, GridSpec, RandomVariable, condition,
                         conditional_expectation_at_stopping_time, expectation)
from .instance import Instance, generate, load, save
from .payoff import Modulus, PayoffField, empirical_modulus, evaluate_game, evaluate_subgame, payoff_at
from .stopping import (StoppingStrategy, StoppingTime, StrategyFamily, compose, react_at,
                       realized_time, validate_strategy)
from .verify import GapReport, best_response, enumerate_best_response, nash_gap

__version__ = "0.1.0"
