"""Dense complex Hermitian operator algebra.

Operators are plain ``numpy`` arrays of dtype ``complex128``.  The
constructors :func:`hermitian`, :func:`density` and :func:`projector`
validate an array, symmetrize away rounding asymmetry and return a
read-only copy, so the result can be shared freely.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, InvariantError, NotHermitianError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
PROJECTOR_TOL = 1e-10
REL_ZERO_TOL = 1e-10
ABS_ZERO_TOL = 1e-14

MODES = ("strict_pos", "nonneg", "nonpos", "strict_neg")


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermitian(a, tol=HERMITIAN_TOL):
    """Validate a square Hermitian matrix and return a symmetrized read-only copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvariantError(f"expected a non-empty square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max |A - A^H| = {dev:.3g})")
    return _frozen((a + a.conj().T) / 2)


def density(a):
    """Validate a density operator: Hermitian, PSD within 1e-10, unit trace within 1e-10."""
    a = hermitian(a)
    tr = np.trace(a).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvariantError(f"density operator must have unit trace, got {tr!r}")
    lo = np.linalg.eigvalsh(a).min()
    if lo < -PSD_TOL:
        raise InvariantError(f"density operator has negative eigenvalue {lo:.3g}")
    return a


def projector(a):
    """Validate an orthogonal projector (P = P^2, eigenvalues in {0, 1})."""
    a = hermitian(a, tol=PROJECTOR_TOL)
    if np.linalg.norm(a @ a - a) > PROJECTOR_TOL:
        raise InvariantError("operator is not idempotent")
    w = np.linalg.eigvalsh(a)
    if np.any(np.minimum(np.abs(w), np.abs(w - 1)) > PROJECTOR_TOL):
        raise InvariantError("projector eigenvalues must be 0 or 1")
    return a


def is_psd(a, tol=PSD_TOL):
    return bool(np.linalg.eigvalsh(np.asarray(a)).min() >= -tol)


def zero_tolerance(eigenvalues):
    """Default threshold below which an eigenvalue counts as zero."""
    eigenvalues = np.asarray(eigenvalues)
    scale = np.max(np.abs(eigenvalues)) if eigenvalues.size else 0.0
    return max(REL_ZERO_TOL * scale, ABS_ZERO_TOL)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (descending) with their orthogonal eigenprojectors."""

    eigenvalues: np.ndarray
    eigenprojectors: tuple
    multiplicities: tuple

    def reconstruct(self):
        return sum(lam * e for lam, e in zip(self.eigenvalues, self.eigenprojectors))


def spectral_decompose(a, cluster_tol: Optional[float] = None) -> SpectralDecomposition:
    """Spectral decomposition A = sum_i lambda_i E_i.

    Eigenvalues closer than ``cluster_tol`` (default ``1e-9 * max|lambda|``)
    are merged into a single eigenprojector, so exact degeneracies that
    rounding has split apart come back as one eigenspace.  Clusters are
    formed by single linkage on the sorted spectrum.
    """
    a = hermitian(a)
    w, v = np.linalg.eigh(a)
    w, v = w[::-1], v[:, ::-1]
    if cluster_tol is None:
        cluster_tol = max(1e-9 * np.max(np.abs(w)), ABS_ZERO_TOL)
    if cluster_tol <= 0:
        raise ValueError("cluster_tol must be positive")
    groups = [[0]]
    for i in range(1, len(w)):
        if w[groups[-1][-1]] - w[i] <= cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    values, projs, mults = [], [], []
    for g in groups:
        vg = v[:, g]
        values.append(float(np.mean(w[g])))
        projs.append(_frozen(vg @ vg.conj().T))
        mults.append(len(g))
    return SpectralDecomposition(np.array(values), tuple(projs), tuple(mults))


def _mask(w, mode, zero_tol):
    if mode == "strict_pos":
        return w > zero_tol
    if mode == "nonneg":
        return w > -zero_tol
    if mode == "nonpos":
        return w <= zero_tol
    if mode == "strict_neg":
        return w <= -zero_tol
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def eigenspace_projector(a, mode="strict_pos", zero_tol: Optional[float] = None):
    """Projector onto {A > 0}, {A >= 0}, {A <= 0} or {A < 0}.

    Eigenvalues with ``|lambda| <= zero_tol`` are treated as zero.  The
    default tolerance is ``1e-10`` times the spectral norm of ``A`` with
    an absolute floor of ``1e-14``.  With a common tolerance the modes
    partition the identity: strict_pos + nonpos = I and
    nonneg + strict_neg = I.
    """
    a = hermitian(a)
    w, v = np.linalg.eigh(a)
    if zero_tol is None:
        zero_tol = zero_tolerance(w)
    if zero_tol < 0:
        raise ValueError("zero_tol must be non-negative")
    vm = v[:, _mask(w, mode, zero_tol)]
    return _frozen(vm @ vm.conj().T)


def trace_pair(a, b) -> float:
    """Re tr(A B); the imaginary residue must stay below 1e-10."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    # tr(AB) = sum_ij A_ij B_ji
    val = np.sum(a * b.T)
    if abs(val.imag) > 1e-10:
        raise InvariantError(f"tr(AB) has imaginary part {val.imag:.3g}")
    return float(val.real)


def tensor(a, b):
    return _frozen(np.kron(hermitian(a), hermitian(b)))


def block_diag(ops: Sequence):
    """Direct sum of Hermitian operators."""
    ops = list(ops)
    if not ops:
        raise ValueError("block_diag needs at least one operator")
    return _frozen(scipy.linalg.block_diag(*[hermitian(o) for o in ops]))


def psd_power(a, power, zero_tol: Optional[float] = None):
    """A^power on supp(A) (pseudo-power); zero outside the support."""
    w, v = np.linalg.eigh(np.asarray(a))
    if zero_tol is None:
        zero_tol = zero_tolerance(w)
    keep = w > zero_tol
    vk = v[:, keep]
    return (vk * w[keep] ** power) @ vk.conj().T


def support_projector(a, zero_tol: Optional[float] = None):
    return eigenspace_projector(a, "strict_pos", zero_tol)


def maximally_mixed(dim):
    return _frozen(np.eye(dim) / dim)
