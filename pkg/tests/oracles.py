"""Independent reference computations for the test suite.

None of these touch cqmeta; they use linear programming, brute-force
grids or hand-derived closed forms.
"""

from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def classical_alpha_beta(p0, p1, beta):
    """min 1 - p0.T subject to p1.T <= beta, 0 <= T <= 1, solved as an LP."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    res = linprog(-p0, A_ub=[p1], b_ub=[beta], bounds=[(0, 1)] * len(p0), method="highs")
    assert res.success
    return 1.0 + res.fun


def classical_map_error(priors, dists):
    """1 - sum_y max_i p_i P_i(y)."""
    joint = np.asarray(priors)[:, None] * np.asarray(dists)
    return 1.0 - joint.max(axis=0).sum()


def grid_sup(rho0, rho1, beta, ts):
    """max over ts of 1 - t beta - tr((rho0 - t rho1)_+), straight from numpy."""
    best = -np.inf
    for t in ts:
        w = np.linalg.eigvalsh(rho0 - t * rho1)
        best = max(best, 1.0 - t * beta - w[w > 0].sum())
    return best


def random_state(rng, d, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


# Four-state qubit example, exact values derived by hand
EX1_EPS = Fraction(7, 15)
EX1_C0 = Fraction(8, 15)
EX1_MU0 = (Fraction(3, 4), Fraction(1, 4))
# alpha_{1/4}(T || D(diag(.7,.3))) = 16/35 and the spectral bound 3/7 at t = 4/7
EX1_ALPHA_AVG = Fraction(16, 35)
EX1_TIGHT_AVG = Fraction(3, 7)


def bell_closed_form(n_qubits, M, param=0.0):
    """1 - (2^N (1 - p) + p)/M; p = 0 gives the ideal channel."""
    d = 2**n_qubits
    return 1.0 - (d * (1.0 - param) + param) / M


def ex1_povm():
    """Optimal measurement for the four-state example; the fourth element is zero."""
    return [
        np.array([[8 / 9, 0], [0, 0]]),
        np.array([[1 / 18, 1 / 6], [1 / 6, 1 / 2]]),
        np.array([[1 / 18, -1 / 6], [-1 / 6, 1 / 2]]),
        np.zeros((2, 2)),
    ]


def _herm_var(d):
    import cvxpy as cp

    return cp.Variable((d, d), hermitian=True)


def sdp_alpha_beta(rho0, rho1, beta):
    """min 1 - tr(rho0 T) s.t. tr(rho1 T) <= beta, 0 <= T <= I, as a semidefinite program."""
    import cvxpy as cp

    d = rho0.shape[0]
    T = _herm_var(d)
    cons = [T >> 0, np.eye(d) - T >> 0, cp.real(cp.trace(rho1 @ T)) <= beta]
    prob = cp.Problem(cp.Minimize(1 - cp.real(cp.trace(rho0 @ T))), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


def sdp_min_error(priors, states):
    """min 1 - sum_i p_i tr(tau_i Pi_i) over POVMs, as a semidefinite program."""
    import cvxpy as cp

    d = states[0].shape[0]
    pis = [_herm_var(d) for _ in states]
    cons = [p >> 0 for p in pis] + [sum(pis) == np.eye(d)]
    success = sum(p * cp.real(cp.trace(s @ e)) for p, s, e in zip(priors, states, pis))
    prob = cp.Problem(cp.Maximize(success), cons)
    prob.solve(solver="CLARABEL")
    return 1 - prob.value
