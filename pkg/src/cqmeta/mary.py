"""Bayesian M-ary quantum hypothesis testing.

Minimum-error discrimination of M states with priors, the optimality
conditions that certify a measurement, an iterative solver, and the two
binary-test characterizations of the minimum error (the block operators
T and D(mu0), and the single-threshold spectral bound).
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .binary import alpha_beta, pencil_breakpoints
from .errors import ConvergenceError, DimensionMismatchError, InvariantError
from .herm import ABS_ZERO_TOL, PSD_TOL, density, eigenspace_projector, hermitian

PRIOR_TOL = 1e-12
POVM_SUM_TOL = 1e-9
HYKL_TOL = 1e-8
PINV_REL_TOL = 1e-12
CHUNK = 25


@dataclass(frozen=True)
class MaryProblem:
    """States tau_1..tau_M on a common space with prior probabilities p_1..p_M."""

    states: tuple
    priors: np.ndarray

    def __post_init__(self):
        states = tuple(density(s) for s in self.states)
        priors = np.asarray(self.priors, dtype=float).ravel()
        if len(states) < 2:
            raise InvariantError("an M-ary problem needs M >= 2 states")
        if len(priors) != len(states):
            raise DimensionMismatchError(f"{len(states)} states but {len(priors)} priors")
        if len({s.shape for s in states}) != 1:
            raise DimensionMismatchError("all states must have the same dimension")
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > PRIOR_TOL:
            raise InvariantError("priors must be non-negative and sum to 1")
        priors = priors.copy()
        priors.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", priors)

    @property
    def M(self):
        return len(self.states)

    @property
    def dim(self):
        return self.states[0].shape[0]

    @property
    def weighted(self):
        """Stack of p_i tau_i with shape (M, d, d)."""
        return np.stack([p * s for p, s in zip(self.priors, self.states)])

    @classmethod
    def uniform(cls, states):
        return cls(tuple(states), np.full(len(states), 1.0 / len(states)))


@dataclass(frozen=True)
class Povm:
    """Measurement {Pi_1..Pi_M}: PSD elements summing to the identity."""

    elements: tuple

    def __post_init__(self):
        elems = tuple(hermitian(e) for e in self.elements)
        if not elems:
            raise InvariantError("a POVM needs at least one element")
        if len({e.shape for e in elems}) != 1:
            raise DimensionMismatchError("POVM elements must share one dimension")
        for i, e in enumerate(elems):
            lo = np.linalg.eigvalsh(e).min()
            if lo < -PSD_TOL:
                raise InvariantError(f"POVM element {i} has negative eigenvalue {lo:.3g}")
        d = elems[0].shape[0]
        dev = np.linalg.norm(sum(elems) - np.eye(d))
        if dev > POVM_SUM_TOL:
            raise InvariantError(f"POVM elements sum to identity only within {dev:.3g}")
        object.__setattr__(self, "elements", elems)

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True)
class HyklReport:
    """Residuals of the minimum-error optimality conditions for one POVM."""

    lam: np.ndarray
    self_adjoint_residual: float
    stationarity_residuals: tuple
    psd_residuals: tuple
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", self.max_residual <= self.tol)

    @property
    def max_residual(self):
        return max(
            self.self_adjoint_residual, max(self.stationarity_residuals), max(self.psd_residuals)
        )


def _check_pair(problem, povm):
    if len(povm) != problem.M:
        raise DimensionMismatchError(f"{problem.M} states but {len(povm)} POVM elements")
    if povm.elements[0].shape != problem.states[0].shape:
        raise DimensionMismatchError("POVM and states act on different spaces")


def error_probability(problem: MaryProblem, povm: Povm) -> float:
    """1 - sum_i p_i tr(tau_i Pi_i)."""
    _check_pair(problem, povm)
    success = sum(
        p * np.trace(s @ e).real for p, s, e in zip(problem.priors, problem.states, povm.elements)
    )
    return float(np.clip(1.0 - success, 0.0, 1.0))


def _raw_lambda(problem, povm):
    return sum(p * s @ e for p, s, e in zip(problem.priors, problem.states, povm.elements))


def lambda_operator(problem: MaryProblem, povm: Povm):
    """Lambda = sum_i p_i tau_i Pi_i, symmetrized.

    At an optimal measurement Lambda is Hermitian; use :func:`hykl_verify`
    to see how far the raw product is from it.
    """
    _check_pair(problem, povm)
    lam = _raw_lambda(problem, povm)
    return (lam + lam.conj().T) / 2


def hykl_verify(problem: MaryProblem, povm: Povm, tol: float = HYKL_TOL) -> HyklReport:
    """Evaluate the necessary and sufficient optimality conditions.

    With Lambda = sum_i p_i tau_i Pi_i the POVM is optimal iff Lambda is
    Hermitian, (Lambda - p_m tau_m) Pi_m = 0 for every m, and
    Lambda - p_m tau_m >= 0 for every m.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_pair(problem, povm)
    raw = _raw_lambda(problem, povm)
    lam = (raw + raw.conj().T) / 2
    stat, psd = [], []
    for p, s, e in zip(problem.priors, problem.states, povm.elements):
        gap = lam - p * s
        stat.append(float(np.linalg.norm(gap @ e)))
        psd.append(float(max(0.0, -np.linalg.eigvalsh(gap).min())))
    return HyklReport(
        lam=lam,
        self_adjoint_residual=float(np.linalg.norm(raw - raw.conj().T)),
        stationarity_residuals=tuple(stat),
        psd_residuals=tuple(psd),
        tol=tol,
    )


def _as_povm(pi):
    # restore exact Hermiticity and the identity sum lost to rounding
    pi = (pi + pi.conj().transpose(0, 2, 1)) / 2
    pi[-1] += np.eye(pi.shape[1]) - pi.sum(axis=0)
    return Povm(tuple(pi))


def solve_optimal_povm(problem: MaryProblem, tol: float = HYKL_TOL, max_iter: int = 50_000,
                       strict: bool = False):
    """Minimum-error POVM by fixed-point iteration, certified by :func:`hykl_verify`.

    Starting from Pi_i = I/M, each sweep sets
    Pi_i <- S^(-1/2) R_i Pi_i R_i S^(-1/2) with R_i = p_i tau_i and
    S = sum_j R_j Pi_j R_j, then hands the identity deficit to the element
    with the largest overlap.  The iteration runs past ``tol`` to an
    internal target 1000 times smaller, so that the reported error
    probability is accurate well below the certificate tolerance; it stops
    early once the residual stalls.

    Returns ``(povm, report, iterations)``.  If the residuals never drop
    below ``tol`` the best iterate is returned with ``report.passed`` false,
    or :class:`ConvergenceError` is raised when ``strict`` is set.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    R = np.ascontiguousarray(problem.weighted.astype(complex))
    pi = np.stack([np.eye(problem.dim, dtype=complex) / problem.M] * problem.M)
    target = max(tol * 1e-3, 1e-13)
    best = None
    previous = np.inf
    done = 0
    stalled = 0
    while done < max_iter:
        n = min(CHUNK, max_iter - done)
        pi = kernels.fixed_point(R, pi, n, PINV_REL_TOL, ABS_ZERO_TOL)
        done += n
        povm = _as_povm(pi.copy())
        report = hykl_verify(problem, povm, tol)
        r = report.max_residual
        if best is None or r < best[1].max_residual:
            best = (povm, report, done)
        stalled = stalled + 1 if r > 0.999 * previous else 0
        previous = min(previous, r)
        if r <= target or (best[1].passed and stalled >= 4):
            break
    povm, report, iters = best
    if strict and not report.passed:
        raise ConvergenceError(
            f"no certified optimum after {iters} iterations "
            f"(max HYKL residual {report.max_residual:.3g} > {tol:.3g})",
            result=best,
        )
    return povm, report, iters


def mu0_star(problem: MaryProblem, povm: Povm):
    """The normalized Lambda of an optimal POVM and its trace c0 = 1 - epsilon."""
    report = hykl_verify(problem, povm, 1e-6)
    if not report.passed:
        raise InvariantError(
            f"POVM is not optimal (max HYKL residual {report.max_residual:.3g} > 1e-6)"
        )
    c0 = float(np.trace(report.lam).real)
    if c0 <= 0:
        raise ValueError("Lambda has non-positive trace; the POVM always errs")
    mu = report.lam / c0
    w, v = np.linalg.eigh(mu)
    # clip rounding-level negative eigenvalues before validating
    mu = (v * np.clip(w, 0.0, None)) @ v.conj().T
    return density(mu / np.trace(mu).real), c0


def _check_mu(problem, mu0):
    mu0 = density(mu0)
    if mu0.shape[0] != problem.dim:
        raise DimensionMismatchError(f"mu0 has dim {mu0.shape[0]}, states have dim {problem.dim}")
    return mu0


def theorem1_value(problem: MaryProblem, mu0) -> float:
    """alpha_{1/M}(T || D(mu0)) with T = diag(p_i tau_i) and D(mu0) = diag(mu0/M, ..., mu0/M).

    A lower bound on the minimum error probability for every mu0, with
    equality at the normalized Lambda of an optimal POVM.
    """
    mu0 = _check_mu(problem, mu0)
    M = problem.M
    T = [p * s for p, s in zip(problem.priors, problem.states)]
    D = [mu0 / M] * M
    return alpha_beta(T, D, 1.0 / M)[0]


def tight_spectrum_objective(problem: MaryProblem, mu0, t: float) -> float:
    """sum_i p_i tr(tau_i {p_i tau_i - t mu0 <= 0}) - t."""
    if t < 0:
        raise ValueError("t must be non-negative")
    mu0 = _check_mu(problem, mu0)
    total = 0.0
    for p, s in zip(problem.priors, problem.states):
        proj = eigenspace_projector(p * s - t * mu0, "nonpos")
        total += p * np.trace(s @ proj).real
    return float(total - t)


def tight_spectrum_breakpoints(problem: MaryProblem, mu0):
    mu0 = _check_mu(problem, mu0)
    pts = set()
    for p, s in zip(problem.priors, problem.states):
        if p > 0:
            pts.update(pencil_breakpoints(p * s, mu0))
    return sorted(pts)


def tight_spectrum_max(problem: MaryProblem, mu0, t_grid: Sequence[float] = ()) -> float:
    """Maximum over t >= 0 of :func:`tight_spectrum_objective`."""
    return tight_spectrum_argmax(problem, mu0, t_grid)[0]


def tight_spectrum_argmax(problem: MaryProblem, mu0, t_grid: Sequence[float] = ()):
    """Maximize :func:`tight_spectrum_objective` over t >= 0.

    Candidates are ``t_grid``, t = 0 and the breakpoints of every pencil
    (p_i tau_i, mu0), where the closed projectors jump.  Each interval
    between consecutive candidates below t = 1 is also searched with a
    bounded scalar minimizer, since for non-commuting states the optimum
    can sit strictly inside an interval.  Beyond t = 1 the objective is
    negative.  Returns ``(value, t)``.
    """
    mu0 = _check_mu(problem, mu0)
    pts = sorted({0.0, 1.0} | {float(t) for t in t_grid if t >= 0}
                 | set(tight_spectrum_breakpoints(problem, mu0)))
    best_t, best = 0.0, tight_spectrum_objective(problem, mu0, 0.0)
    for t in pts:
        v = tight_spectrum_objective(problem, mu0, t)
        if v > best:
            best_t, best = t, v
    inner = [t for t in pts if t <= 1.0]
    for lo, hi in zip(inner[:-1], inner[1:]):
        res = minimize_scalar(lambda t: -tight_spectrum_objective(problem, mu0, t),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if -res.fun > best:
            best_t, best = float(res.x), float(-res.fun)
    return float(best), float(best_t)
