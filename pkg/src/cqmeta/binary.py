"""Optimal binary quantum hypothesis testing.

Every function accepts operators either as a dense matrix or as a
sequence of diagonal blocks of a block-diagonal operator; ``rho0`` and
``rho1`` must share the block layout.  Block inputs are never assembled
into one dense matrix, which keeps the classical-quantum operators
``PW`` and ``P x mu`` cheap.

Errors follow the usual convention for a test ``T``: the type-I error is
``alpha = 1 - tr(rho0 T)`` and the type-II error is ``beta = tr(rho1 T)``.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import DimensionMismatchError, InvariantError, NumericalError
from .herm import ABS_ZERO_TOL, PSD_TOL, REL_ZERO_TOL, hermitian, zero_tolerance

BISECTION_MAX_ITER = 200
BISECTION_WIDTH = 1e-13
BREAKPOINT_MERGE = 1e-9
# slack when comparing beta(t) against the target at an exact breakpoint
BETA_SLACK = 1e-12
SUP_CHECK_TOL = 1e-8


def as_blocks(op):
    """Normalize a dense matrix or a block list to a tuple of Hermitian PSD blocks."""
    if isinstance(op, np.ndarray) and op.ndim == 2:
        blocks = [op]
    else:
        blocks = list(op)
        if not blocks:
            raise ValueError("empty block list")
    out = []
    for b in blocks:
        b = hermitian(b)
        lo = np.linalg.eigvalsh(b).min()
        if lo < -PSD_TOL:
            raise InvariantError(f"operator is not positive semidefinite (eigenvalue {lo:.3g})")
        out.append(b)
    return tuple(out)


def _dense(blocks):
    return blocks[0] if len(blocks) == 1 else scipy.linalg.block_diag(*blocks)


@dataclass(frozen=True)
class TradeoffPoint:
    alpha: float
    beta: float


@dataclass(frozen=True)
class NpTest:
    """Randomized Neyman-Pearson test {rho0 - t rho1 > 0} + theta * {rho0 - t rho1 = 0}.

    The projectors are kept per diagonal block; the dense properties
    assemble them on demand.
    """

    t: float
    strict_blocks: tuple
    null_blocks: tuple
    theta_weight: float = 0.0

    @property
    def strict_projector(self):
        return _dense(self.strict_blocks)

    @property
    def null_projector(self):
        return _dense(self.null_blocks)

    @property
    def blocks(self):
        return tuple(s + self.theta_weight * n for s, n in zip(self.strict_blocks, self.null_blocks))

    @property
    def operator(self):
        return _dense(self.blocks)

    def tradeoff(self, rho0, rho1) -> TradeoffPoint:
        b0, b1 = as_blocks(rho0), as_blocks(rho1)
        tests = self.blocks
        a = 1.0 - sum(np.trace(r @ t).real for r, t in zip(b0, tests))
        b = sum(np.trace(r @ t).real for r, t in zip(b1, tests))
        return TradeoffPoint(float(a), float(b))


def _block_breakpoints(a, b):
    # Finite t > 0 where a - t b is singular, after deflating ker(a) & ker(b).
    w, v = np.linalg.eigh(a + b)
    tol = zero_tolerance(w)
    q = v[:, w > tol]
    if q.shape[1] == 0:
        return []
    a2 = q.conj().T @ a @ q
    b2 = q.conj().T @ b @ q
    wb, vb = np.linalg.eigh(b2)
    keep = wb > tol
    if not np.any(keep):
        return []
    u, k = vb[:, keep], vb[:, ~keep]
    schur = u.conj().T @ a2 @ u
    if k.shape[1]:
        # directions outside supp(b) enter through the Schur complement
        c = k.conj().T @ a2 @ k
        cross = u.conj().T @ a2 @ k
        schur = schur - cross @ np.linalg.solve(c, cross.conj().T)
    scale = 1.0 / np.sqrt(wb[keep])
    x = schur * scale[:, None] * scale[None, :]
    vals = np.linalg.eigvalsh((x + x.conj().T) / 2)
    top = np.max(np.abs(vals)) if vals.size else 0.0
    return [float(x) for x in vals if x > max(REL_ZERO_TOL * top, ABS_ZERO_TOL)]


def _merge(values, rel=BREAKPOINT_MERGE):
    values = sorted(values)
    groups = []
    for x in values:
        if groups and x - groups[-1][-1] <= rel * max(1.0, x):
            groups[-1].append(x)
        else:
            groups.append([x])
    return [float(np.mean(g)) for g in groups]


class Pencil:
    """The operator pencil rho0 - t rho1 with cached kernels input.

    Most callers should use the module functions; this class exists so
    that repeated queries against one pair reuse validation and stacking.
    """

    def __init__(self, rho0, rho1):
        self.blocks0 = as_blocks(rho0)
        self.blocks1 = as_blocks(rho1)
        if len(self.blocks0) != len(self.blocks1) or any(
            x.shape != y.shape for x, y in zip(self.blocks0, self.blocks1)
        ):
            raise DimensionMismatchError("rho0 and rho1 must share the same block layout")
        sizes = sorted({b.shape[0] for b in self.blocks0})
        self._stacks0, self._stacks1 = [], []
        for s in sizes:
            idx = [i for i, b in enumerate(self.blocks0) if b.shape[0] == s]
            self._stacks0.append(np.ascontiguousarray(np.stack([self.blocks0[i] for i in idx])))
            self._stacks1.append(np.ascontiguousarray(np.stack([self.blocks1[i] for i in idx])))
        self._cache = {}
        self._breakpoints = None

    def stats(self, t):
        """[tr(rho0 P+), tr(rho1 P+), tr(rho0 P0), tr(rho1 P0), tr((rho0 - t rho1)_+)] at t."""
        t = float(t)
        if t not in self._cache:
            self._cache[t] = kernels.threshold_stats(
                self._stacks0, self._stacks1, t, REL_ZERO_TOL, ABS_ZERO_TOL
            )
        return self._cache[t]

    def beta_strict(self, t):
        return float(self.stats(t)[1])

    def beta_closed(self, t):
        st = self.stats(t)
        return float(st[1] + st[3])

    def sup_objective(self, t, beta):
        """tr(rho0 {rho0 - t rho1 <= 0}) + t (tr(rho1 {rho0 - t rho1 > 0}) - beta).

        Evaluated as 1 - t beta - tr((rho0 - t rho1)_+), which is continuous
        in t and needs no zero tolerance.
        """
        st = self.stats(t)
        return float(1.0 - t * beta - st[4])

    def breakpoints(self):
        if self._breakpoints is None:
            vals = []
            for a, b in zip(self.blocks0, self.blocks1):
                vals.extend(_block_breakpoints(a, b))
            self._breakpoints = _merge(vals)
        return list(self._breakpoints)

    def projectors(self, t):
        """Per-block strict and null projectors of rho0 - t rho1 (global zero tolerance)."""
        eig = [np.linalg.eigh(a - t * b) for a, b in zip(self.blocks0, self.blocks1)]
        tol = zero_tolerance(np.concatenate([w for w, _ in eig]))
        strict, null = [], []
        for w, v in eig:
            vp = v[:, w > tol]
            vn = v[:, np.abs(w) <= tol]
            strict.append(vp @ vp.conj().T)
            null.append(vn @ vn.conj().T)
        return tuple(strict), tuple(null)

    def _limit_test(self):
        # t -> infinity: keep the positive part of rho0 compressed to ker(rho1)
        strict, null = [], []
        for a, b in zip(self.blocks0, self.blocks1):
            w, v = np.linalg.eigh(b)
            k = v[:, w <= zero_tolerance(w)]
            d = a.shape[0]
            if k.shape[1] == 0:
                strict.append(np.zeros((d, d), complex))
                null.append(np.zeros((d, d), complex))
                continue
            wc, vc = np.linalg.eigh(k.conj().T @ a @ k)
            vp = k @ vc[:, wc > zero_tolerance(wc)]
            strict.append(vp @ vp.conj().T)
            null.append(np.zeros((d, d), complex))
        return NpTest(float("inf"), tuple(strict), tuple(null), 0.0)

    def alpha_beta(self, beta):
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {beta!r}")
        pts = [0.0] + self.breakpoints()

        # largest k with beta_closed(pts[k]) >= beta; beta_closed(0) = 1
        lo, hi = 0, len(pts) - 1
        if self.beta_closed(pts[hi]) >= beta - BETA_SLACK:
            lo = hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.beta_closed(pts[mid]) >= beta - BETA_SLACK:
                lo = mid
            else:
                hi = mid
        t = pts[lo]
        if self.beta_strict(t) > beta + BETA_SLACK and beta <= BETA_SLACK:
            # no finite threshold reaches beta ~ 0, and chasing one would push t
            # past where the zero tolerance can be trusted; use the t -> inf limit
            test = self._limit_test()
            return test.tradeoff(self.blocks0, self.blocks1).alpha, test
        if self.beta_strict(t) > beta + BETA_SLACK:
            # beta(t) is continuous on the open interval after pts[lo]
            left = t
            if lo + 1 < len(pts):
                right = pts[lo + 1]
            else:
                right = max(2.0 * left, left + 1.0)
                while self.beta_strict(right) > beta and right < 1e12:
                    right *= 2.0
                if self.beta_strict(right) > beta:
                    # only beta ~ 0 can land here; the optimum is the t -> inf limit
                    test = self._limit_test()
                    return test.tradeoff(self.blocks0, self.blocks1).alpha, test
            for _ in range(BISECTION_MAX_ITER):
                if right - left <= BISECTION_WIDTH * max(1.0, right):
                    break
                mid = 0.5 * (left + right)
                if self.beta_strict(mid) > beta:
                    left = mid
                else:
                    right = mid
            t = right
        st = self.stats(t)
        theta = 0.0
        if st[3] > 0:
            theta = float(np.clip((beta - st[1]) / st[3], 0.0, 1.0))
        alpha = float(1.0 - st[0] - theta * st[2])
        check = self.sup_objective(t, beta)
        if abs(alpha - check) > SUP_CHECK_TOL:
            raise NumericalError(
                f"alpha_beta={alpha!r} disagrees with the sup form {check!r} at t={t!r}"
            )
        strict, null = self.projectors(t)
        return alpha, NpTest(float(t), strict, null, theta)


def np_test_at(rho0, rho1, t):
    """The two extreme randomizations of the Neyman-Pearson test at threshold t.

    Returns ``(test, point_theta0, point_theta1)`` where ``test`` has
    ``theta_weight = 0`` and the points are the (alpha, beta) pairs of the
    strict test and of the closed test {rho0 - t rho1 >= 0}.
    """
    if t < 0:
        raise ValueError("threshold t must be non-negative")
    p = Pencil(rho0, rho1)
    st = p.stats(t)
    strict, null = p.projectors(t)
    return (
        NpTest(float(t), strict, null, 0.0),
        TradeoffPoint(float(1.0 - st[0]), float(st[1])),
        TradeoffPoint(float(1.0 - st[0] - st[2]), float(st[1] + st[3])),
    )


def beta_of_t(rho0, rho1, t):
    """(beta of the strict test, beta of the closed test) at threshold t."""
    p = Pencil(rho0, rho1)
    return p.beta_strict(t), p.beta_closed(t)


def alpha_beta(rho0, rho1, beta):
    """Minimum type-I error among tests with type-II error at most ``beta``.

    The threshold is located by binary search over the pencil breakpoints
    (where beta(t) jumps) followed by bisection inside the bracketing
    interval, where beta(t) is continuous and non-increasing.  At the
    threshold the null eigenspace is mixed in with a scalar weight so that
    the type-II constraint is met with equality.

    Returns
    -------
    value : float
        alpha_beta(rho0 || rho1).
    test : NpTest
        An optimal test achieving ``value`` with ``tr(rho1 T) = beta``.
    """
    return Pencil(rho0, rho1).alpha_beta(beta)


def alpha_sup_form(rho0, rho1, beta, t_grid: Iterable[float] = (), refine=True):
    """Evaluate the variational form sup_t {tr(rho0 {rho0-t rho1<=0}) + t(tr(rho1 {rho0-t rho1>0}) - beta)}.

    The supremum runs over ``t_grid`` augmented with 0 and every pencil
    breakpoint.  The objective is concave in ``t``, so with ``refine`` the
    best grid point is polished by a bounded scalar search on its two
    neighbouring intervals; this catches optima that fall strictly
    between breakpoints (non-commuting pairs).  Every evaluated value is a
    lower bound on alpha_beta.
    """
    p = Pencil(rho0, rho1)
    grid = sorted({float(t) for t in t_grid if t >= 0} | {0.0} | set(p.breakpoints()))
    values = [p.sup_objective(t, beta) for t in grid]
    i = int(np.argmax(values))
    best = values[i]
    if refine:
        left = grid[i - 1] if i > 0 else grid[i]
        if i + 1 < len(grid):
            right = grid[i + 1]
        else:
            # past the last breakpoint: grow until the concave objective turns down
            right = 2.0 * grid[i] + 1.0
            while right < 1e12 and p.sup_objective(2.0 * right, beta) > p.sup_objective(right, beta):
                right *= 2.0
            right *= 2.0
        if right > left:
            res = minimize_scalar(
                lambda t: -p.sup_objective(t, beta),
                bounds=(left, right),
                method="bounded",
                options={"xatol": 1e-12 * max(1.0, right)},
            )
            best = max(best, -float(res.fun))
    return float(best)


def np_relaxation_bound(rho0, rho1, beta, t):
    """Single-threshold relaxation tr(rho0 {rho0 - t rho1 <= 0}) - t beta <= alpha_beta."""
    p = Pencil(rho0, rho1)
    return p.sup_objective(t, beta)


def pencil_breakpoints(rho0, rho1):
    """Sorted thresholds t > 0 at which rho0 - t rho1 is singular.

    The common kernel of rho0 and rho1 is deflated first (those directions
    are null for every t).  On the rest, directions outside supp(rho1)
    enter through a Schur complement, and the breakpoints are the
    eigenvalues of rho1^(-1/2) S rho1^(-1/2) on supp(rho1).  Values within
    a relative 1e-9 of each other are merged.
    """
    return Pencil(rho0, rho1).breakpoints()
