"""Small reference problems used by the CLI, the tests and the benchmark."""

import numpy as np

from .mary import MaryProblem


def example1_problem() -> MaryProblem:
    """Four qubit states with priors (2/5, 1/5, 1/5, 1/5).

    tau_1 = |0><0|, tau_2 = |+><+|, tau_3 = |-><-| and tau_4 = I/2.  The
    minimum error is 7/15 and the optimal measurement never guesses 4.
    """
    plus = np.full((2, 2), 0.5)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
    states = (np.diag([1.0, 0.0]), plus, minus, np.eye(2) / 2)
    return MaryProblem(states, np.array([0.4, 0.2, 0.2, 0.2]))


def example1_average_state():
    """sum_i p_i tau_i = diag(0.7, 0.3)."""
    return np.diag([0.7, 0.3])
