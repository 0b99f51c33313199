"""Pure numpy implementation of the hot kernels.

Both backends share one contract.  Block operators are passed as lists of
C-contiguous ``complex128`` stacks of shape ``(b, d, d)``, one stack per
distinct block size.
"""

import numpy as np

BACKEND = "python"
TIE_TOL = 1e-12


def threshold_stats(stacks0, stacks1, t, rel_tol, abs_tol):
    """Traces of rho0, rho1 against the strict and null eigenspaces of rho0 - t rho1.

    Returns ``[tr(rho0 P+), tr(rho1 P+), tr(rho0 P0), tr(rho1 P0), tr(A_+)]``
    where ``A = rho0 - t rho1``, ``P+ = {A > 0}`` and ``P0 = {A = 0}``.  The
    last entry sums the positive eigenvalues without any tolerance.  Zero
    means ``|lambda| <= max(rel_tol * max|lambda|, abs_tol)``, with the
    maximum taken over all blocks.
    """
    ws, q0s, q1s = [], [], []
    for r0, r1 in zip(stacks0, stacks1):
        w, v = np.linalg.eigh(r0 - t * r1)
        ws.append(w.ravel())
        q0s.append(np.sum(v.conj() * (r0 @ v), axis=1).real.ravel())
        q1s.append(np.sum(v.conj() * (r1 @ v), axis=1).real.ravel())
    w = np.concatenate(ws)
    q0 = np.concatenate(q0s)
    q1 = np.concatenate(q1s)
    tol = max(rel_tol * np.max(np.abs(w)), abs_tol) if w.size else abs_tol
    pos = w > tol
    null = np.abs(w) <= tol
    return np.array(
        [q0[pos].sum(), q1[pos].sum(), q0[null].sum(), q1[null].sum(), w[w > 0].sum()]
    )


def fixed_point(R, Pi, n_iter, rel_tol, abs_tol):
    """Run ``n_iter`` sweeps of the measurement fixed-point map.

    ``R`` holds the weighted states p_i tau_i and ``Pi`` the current POVM,
    both of shape ``(M, d, d)``.  Each sweep applies
    Pi_i <- L^-1 R_i Pi_i R_i L^-1 with L = (sum_j R_j Pi_j R_j)^(1/2)
    inverted on its support, then adds the identity deficit to the element
    with the largest tr(R_i deficit), ties within 1e-12 going to
    the lowest index.  Returns a new array.
    """
    M, d, _ = R.shape
    eye = np.eye(d)
    Pi = np.array(Pi, dtype=complex)
    for _ in range(n_iter):
        RP = R @ Pi
        S = np.einsum("mij,mjk->ik", RP, R)
        S = (S + S.conj().T) / 2
        w, v = np.linalg.eigh(S)
        tol = max(rel_tol * np.max(np.abs(w)), abs_tol)
        keep = w > tol
        vk = v[:, keep]
        Linv = (vk / np.sqrt(w[keep])) @ vk.conj().T
        Pi = Linv @ RP @ R @ Linv
        Pi = (Pi + Pi.conj().transpose(0, 2, 1)) / 2
        deficit = eye - Pi.sum(axis=0)
        scores = np.einsum("mij,ji->m", R, deficit).real
        # near-ties go to the lowest index so rounding cannot pick the winner
        j = int(np.flatnonzero(scores >= scores.max() - TIE_TOL)[0])
        Pi[j] += deficit
    return Pi
