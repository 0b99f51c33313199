"""Perfect and quasi-perfect codes.

For a channel x -> W_x, an auxiliary state mu and a threshold t, every
input has the closed projector E_x(t, mu) = {W_x - t mu >= 0}, the open
projector {W_x - t mu > 0} and the relaxed projector
{W_x - t mu >= -eps I}.  A code is certified by scanning t for the
packing radius (smallest t > 0 where the open projectors of distinct
codewords are orthogonal) and then measuring how far the closed
projectors are from covering the space.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .binary import alpha_beta, pencil_breakpoints
from .channel import Channel, Code, InputDistribution, code_problem, meta_converse, pe_of_code
from .errors import DecoderUnavailableError, NotSymmetricError
from .herm import density, zero_tolerance
from .mary import Povm, hykl_verify

ORTHO_TOL = 1e-9
COVER_TOL = 1e-9
SYMMETRY_TOL = 1e-9
BASIS_TOL = 1e-9
EQUAL_TOL = 1e-7
MODES = ("closed", "open", "eps")
_SEED = 20240611


def _spectrum(w, t, mu):
    a = w - t * mu
    a = (a + a.conj().T) / 2
    vals, vecs = np.linalg.eigh(a)
    return a, vals, vecs, zero_tolerance(vals)


def _projector_from(vals, vecs, tol, mode, epsilon=0.0):
    if mode == "closed":
        keep = vals > -tol
    elif mode == "open":
        keep = vals > tol
    elif mode == "eps":
        if epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        keep = vals >= -epsilon - tol
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    v = vecs[:, keep]
    return v @ v.conj().T


def e_projector(channel: Channel, x, t: float, mu, mode: str = "closed", epsilon: float = 0.0):
    """{W_x - t mu >= 0} (closed), {W_x - t mu > 0} (open) or {W_x - t mu >= -eps I} (eps)."""
    _, vals, vecs, tol = _spectrum(channel[x], t, density(mu))
    return _projector_from(vals, vecs, tol, mode, epsilon)


def f_value(channel, x, t, mu):
    """tr(W_x E_x(t, mu))."""
    return float(np.trace(channel[x] @ e_projector(channel, x, t, mu, "closed")).real)


def g_value(channel, x, t, mu):
    """tr(mu E_x(t, mu))."""
    mu = density(mu)
    return float(np.trace(mu @ e_projector(channel, x, t, mu, "closed")).real)


def f_open(channel, x, t, mu):
    return float(np.trace(channel[x] @ e_projector(channel, x, t, mu, "open")).real)


def g_open(channel, x, t, mu):
    mu = density(mu)
    return float(np.trace(mu @ e_projector(channel, x, t, mu, "open")).real)


def _functionals(channel, x, t, mu):
    # (F, G, F_open, G_open) from one eigendecomposition
    _, vals, vecs, tol = _spectrum(channel[x], t, mu)
    w = channel[x]
    out = []
    for mode in ("closed", "open"):
        p = _projector_from(vals, vecs, tol, mode)
        out += [np.trace(w @ p).real, np.trace(mu @ p).real]
    return out[0], out[1], out[2], out[3]


def _breakpoints(channel, labels, mu):
    pts = set()
    for x in labels:
        pts.update(pencil_breakpoints(channel[x], mu))
    return sorted(pts)


@dataclass(frozen=True)
class SymmetryReport:
    """Cross-input spread of the F and G functionals over every constancy interval of t."""

    mu: np.ndarray
    t_breakpoints: tuple
    f_table: dict
    max_deviation: float
    symmetric: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "symmetric", self.max_deviation <= SYMMETRY_TOL)


def symmetry_check(channel: Channel, mu, extra_t_samples: Sequence[float] = (), inputs=None):
    """Check that F_x(t, mu) and G_x(t, mu) do not depend on x.

    Samples every breakpoint of the pencils (W_x, mu), the midpoint of each
    gap between consecutive breakpoints, one point below 0 and one past the
    last breakpoint, plus ``extra_t_samples``.  Between breakpoints the
    eigenvalue signs of W_x - t mu are fixed, so for commuting pairs this
    covers every value of the functionals.  ``inputs`` restricts the check
    to a subset of the alphabet (for instance the codewords of a code).
    """
    mu = density(mu)
    labels = list(channel.input_alphabet if inputs is None else dict.fromkeys(inputs))
    bps = _breakpoints(channel, labels, mu)
    grid = [0.0] + bps
    samples = {-1.0, (grid[-1] if grid else 0.0) + 1.0}
    samples.update(grid)
    samples.update((a + b) / 2 for a, b in zip(grid[:-1], grid[1:]))
    samples.update(float(t) for t in extra_t_samples)
    table, dev = {}, 0.0
    for t in sorted(samples):
        rows = [_functionals(channel, x, t, mu) for x in labels]
        for x, r in zip(labels, rows):
            table[(x, t)] = float(r[0])
        arr = np.array(rows)
        dev = max(dev, float(np.max(arr.max(axis=0) - arr.min(axis=0))))
    return SymmetryReport(mu, tuple(bps), table, dev)


class _Snapshot:
    """Eigendecompositions of W_x - t mu for every codeword position at one t."""

    def __init__(self, channel, code, t, mu):
        self.t = t
        cache = {}
        for x in dict.fromkeys(code.codewords):
            cache[x] = _spectrum(channel[x], t, mu)
        self.spectra = [cache[x] for x in code.codewords]

    def projectors(self, mode, epsilon=0.0):
        return [_projector_from(v, u, tol, mode, epsilon) for _, v, u, tol in self.spectra]


def _max_overlap(projs):
    if len(projs) < 2:
        return 0.0
    return max(float(np.linalg.norm(p @ q)) for p, q in combinations(projs, 2))


def packing_radius(channel: Channel, code: Code, mu) -> float:
    """Smallest t > 0 at which the open projectors of distinct codeword positions are orthogonal.

    Candidates are the positive breakpoints of the pencils (W_x, mu).  At
    a breakpoint the vanishing eigenvalue has already left the open
    projector, so the breakpoint itself represents the interval to its
    right.  Should orthogonality first appear strictly inside an interval
    (possible when W_x and mu do not commute), the crossing is located by
    bisection.  Returns ``inf`` if the open projectors are never
    orthogonal.
    """
    code.check(channel)
    mu = density(mu)
    pts = [t for t in _breakpoints(channel, code.codewords, mu) if t > 0]

    def ok(t):
        return _max_overlap(_Snapshot(channel, code, t, mu).projectors("open")) <= ORTHO_TOL

    for i, t in enumerate(pts):
        if ok(t):
            return float(t)
        right = pts[i + 1] if i + 1 < len(pts) else None
        if right is not None and ok(0.5 * (t + right)):
            lo, hi = t, 0.5 * (t + right)
            for _ in range(100):
                if hi - lo <= 1e-13 * max(1.0, hi):
                    break
                mid = 0.5 * (lo + hi)
                lo, hi = (lo, mid) if ok(mid) else (mid, hi)
            return float(hi)
    return float("inf")


@dataclass(frozen=True)
class IndexPartition:
    """Residual basis vectors and the codeword each one is handed to.

    ``residual_basis`` holds rank-one projectors spanning the complement
    of the open projectors, ``assignment[i]`` is the codeword position
    (0-based) that receives basis element i, and ``eps_values[(i, m)]`` is
    -<e_i|W_{x_m} - t mu|e_i>.  ``members`` lists the codeword positions
    whose operators were diagonalized jointly; it is every position when
    the full code admits a common eigenbasis.
    """

    residual_basis: tuple
    assignment: dict
    eps_values: dict
    members: tuple

    def eps(self, i):
        return self.eps_values[(i, self.assignment[i])]


def _residual_frame(snap):
    opens = snap.projectors("open")
    d = opens[0].shape[0]
    total = sum(opens)
    w, v = np.linalg.eigh((total + total.conj().T) / 2)
    return v[:, w <= 0.5], opens, d


def _common_basis(ops, q):
    # Joint eigenbasis of the compressions q^H A q, or None if there is none.
    comp = []
    for a in ops:
        b = q.conj().T @ a @ q
        if np.linalg.norm(a @ q - q @ b) > BASIS_TOL:
            return None
        comp.append(b)
    for b1, b2 in combinations(comp, 2):
        if np.linalg.norm(b1 @ b2 - b2 @ b1) > BASIS_TOL:
            return None
    rng = np.random.default_rng(_SEED)
    mix = sum(c * b for c, b in zip(rng.normal(size=len(comp)), comp))
    _, u = np.linalg.eigh((mix + mix.conj().T) / 2)
    for b in comp:
        off = u.conj().T @ b @ u
        if np.linalg.norm(off - np.diag(np.diag(off))) > BASIS_TOL:
            return None
    return q @ u, comp


def _partition(snap, members):
    q, _, _ = _residual_frame(snap)
    if q.shape[1] == 0:
        return IndexPartition((), {}, {}, tuple(members))
    if not members:
        return None
    ops = [snap.spectra[m][0] for m in members]
    found = _common_basis(ops, q)
    if found is None:
        return None
    basis, _ = found
    projs, assign, eps = [], {}, {}
    for i in range(basis.shape[1]):
        e = basis[:, i]
        projs.append(np.outer(e, e.conj()))
        vals = []
        for m in members:
            val = float(-(e.conj() @ snap.spectra[m][0] @ e).real)
            eps[(i, m)] = val
            vals.append(val)
        # ties go to the lowest codeword position
        assign[i] = members[int(np.argmin(np.round(vals, 12)))]
    return IndexPartition(tuple(projs), assign, eps, tuple(members))


def optimality_gap(channel: Channel, code: Code, mu, t_bar: float):
    """Smallest eps >= 0 with sum_m {W_{x_m} - t_bar mu >= -eps I} >= I.

    Candidates are 0 and the magnitudes of the non-positive eigenvalues of
    every W_x - t_bar mu; covering is monotone in eps, so the smallest
    covering candidate is found by bisection over the sorted candidates.

    Returns ``(gap, partition)`` where ``partition`` is the
    :class:`IndexPartition` built from a joint eigenbasis of all codeword
    operators on the complement of the open projectors, or ``None`` when
    no such basis exists.
    """
    code.check(channel)
    mu = density(mu)
    if not np.isfinite(t_bar):
        return float("inf"), None
    snap = _Snapshot(channel, code, t_bar, mu)
    cands = {0.0}
    for _, vals, _, tol in snap.spectra:
        cands.update(float(-v) for v in vals if v <= tol and -v > 0)
    cands = sorted(cands)

    def covers(eps):
        total = sum(snap.projectors("eps", eps))
        return np.linalg.eigvalsh((total + total.conj().T) / 2).min() >= 1.0 - COVER_TOL

    lo, hi = 0, len(cands) - 1
    if covers(cands[0]):
        hi = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if covers(cands[mid]):
            hi = mid
        else:
            lo = mid
    return float(cands[hi]), _partition(snap, list(range(code.M)))


@dataclass(frozen=True)
class QpCertificate:
    t_bar: float
    mu: np.ndarray
    orthogonality_residual: float
    covering_margin: float
    gap: float
    status: str
    symmetric: bool

    def to_dict(self):
        return {
            "t_bar": self.t_bar,
            "mu": [[[float(z.real), float(z.imag)] for z in row] for row in self.mu],
            "orthogonality_residual": self.orthogonality_residual,
            "covering_margin": self.covering_margin,
            "gap": self.gap,
            "status": self.status,
            "symmetric": self.symmetric,
        }


def certify(channel: Channel, code: Code, mu) -> QpCertificate:
    """Classify a code as perfect, quasi-perfect or neither with respect to mu.

    Perfect: at the packing radius the closed projectors are pairwise
    orthogonal and sum to the identity.  Quasi-perfect: the optimality gap
    is zero and the closed projectors cover the space.  The certificate
    also records whether the channel is symmetric on the codewords; the
    error-probability identities for quasi-perfect codes assume it.
    """
    code.check(channel)
    mu = density(mu)
    symmetric = symmetry_check(channel, mu, inputs=code.codewords).symmetric
    t_bar = packing_radius(channel, code, mu)
    if not np.isfinite(t_bar):
        return QpCertificate(t_bar, mu, float("inf"), float("-inf"), float("inf"), "neither", symmetric)
    snap = _Snapshot(channel, code, t_bar, mu)
    ortho = _max_overlap(snap.projectors("open"))
    closed = snap.projectors("closed")
    total = sum(closed)
    d = total.shape[0]
    margin = float(np.linalg.eigvalsh((total + total.conj().T) / 2).min() - 1.0)
    gap, _ = optimality_gap(channel, code, mu, t_bar)
    if _max_overlap(closed) <= ORTHO_TOL and np.linalg.norm(total - np.eye(d)) <= COVER_TOL:
        status = "perfect"
    elif gap <= COVER_TOL and margin >= -COVER_TOL:
        status = "quasi_perfect"
    else:
        status = "neither"
    return QpCertificate(float(t_bar), mu, ortho, margin, float(gap), status, symmetric)


def qp_error_probability(channel: Channel, code: Code, t: float, mu) -> float:
    """1 - F_open(t, mu) + t (G_open(t, mu) - 1/M) for a channel symmetric on the code.

    Equals the minimum error probability of a quasi-perfect code at its
    packing radius and is a strict lower bound for any other code.
    Raises :class:`NotSymmetricError` if the open functionals differ
    across codewords.
    """
    code.check(channel)
    mu = density(mu)
    vals = np.array([_functionals(channel, x, t, mu)[2:] for x in dict.fromkeys(code.codewords)])
    spread = float(np.max(vals.max(axis=0) - vals.min(axis=0)))
    if spread > SYMMETRY_TOL:
        raise NotSymmetricError(f"open functionals differ across codewords by {spread:.3g}")
    f, g = vals[0]
    return float(1.0 - f + t * (g - 1.0 / code.M))


def gap_formula_value(channel: Channel, code: Code, mu):
    """Bare quasi-perfect formula at the packing radius plus (1/M) sum_i eps_i.

    The correction sums, over the residual basis, the smallest distance
    eps_i = min_x -<e_i|W_x - t mu|e_i>.  It needs a joint eigenbasis of
    all codeword operators; without one the correction is known only when
    the optimality gap is zero (then every eps_i is zero), and
    :class:`DecoderUnavailableError` is raised otherwise.

    Returns ``(value, bare)``.
    """
    t_bar = packing_radius(channel, code, mu)
    bare = qp_error_probability(channel, code, t_bar, mu)
    gap, part = optimality_gap(channel, code, mu, t_bar)
    if part is not None:
        corr = sum(part.eps(i) for i in range(len(part.residual_basis))) / code.M
        return float(bare + corr), float(bare)
    if gap <= COVER_TOL:
        return float(bare), float(bare)
    raise DecoderUnavailableError(
        "no joint residual eigenbasis and a positive optimality gap; "
        "use cqmeta.mary.solve_optimal_povm instead"
    )


def _greedy_members(snap, q):
    # codeword positions, in order, whose compressed operators commute pairwise
    members, comp = [], []
    for m, (a, _, _, _) in enumerate(snap.spectra):
        b = q.conj().T @ a @ q
        if np.linalg.norm(a @ q - q @ b) > BASIS_TOL:
            continue
        if all(np.linalg.norm(b @ c - c @ b) <= BASIS_TOL for c in comp):
            members.append(m)
            comp.append(b)
    return members


def qp_decoder(channel: Channel, code: Code, t_bar: float, mu, tol: float = 1e-8) -> Povm:
    """Projective decoder Pi_m = E_open(x_m) + sum of residual basis elements assigned to m.

    The residual basis is a joint eigenbasis of the codeword operators
    W_x - t_bar mu on the complement of the open projectors; each basis
    vector goes to the codeword with the smallest eps_i(x), ties to the
    lowest position.  If the full code has no joint eigenbasis, the basis
    is built from the largest prefix-greedy set of codewords whose
    operators commute there, and the remaining codewords keep only their
    open projectors.  The result is accepted only if it passes the
    optimality conditions on the full code; otherwise
    :class:`DecoderUnavailableError` is raised.
    """
    code.check(channel)
    mu = density(mu)
    if not np.isfinite(t_bar):
        raise DecoderUnavailableError("infinite packing radius; use the iterative solver")
    snap = _Snapshot(channel, code, t_bar, mu)
    q, opens, d = _residual_frame(snap)
    part = _partition(snap, list(range(code.M)))
    if part is None:
        part = _partition(snap, _greedy_members(snap, q))
    if part is None:
        raise DecoderUnavailableError("no joint residual eigenbasis; use the iterative solver")
    elems = [p.copy() for p in opens]
    for i, proj in enumerate(part.residual_basis):
        elems[part.assignment[i]] = elems[part.assignment[i]] + proj
    povm = Povm(tuple(elems))
    report = hykl_verify(code_problem(channel, code), povm, tol)
    if not report.passed:
        raise DecoderUnavailableError(
            f"constructed decoder fails the optimality conditions "
            f"(residual {report.max_residual:.3g}); use the iterative solver"
        )
    return povm


def theorem4_verify(channel: Channel, code: Code, mu, tol: float = EQUAL_TOL):
    """Compare Pe(C), alpha_{1/M}(W_x || mu) for every codeword, and the meta-converse.

    Returns ``(pe, bound, equal)`` with ``bound`` the meta-converse value
    at P_C and ``equal`` true iff all of them agree within ``tol``.
    """
    code.check(channel)
    mu = density(mu)
    pe, _ = pe_of_code(channel, code)
    singles = [alpha_beta(channel[x], mu, 1.0 / code.M)[0] for x in dict.fromkeys(code.codewords)]
    bound = meta_converse(channel, InputDistribution.from_code(code), mu, code.M)
    vals = [pe, bound] + singles
    return float(pe), float(bound), bool(max(vals) - min(vals) <= tol)
