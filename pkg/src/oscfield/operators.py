"""Single-oscillator space H1 = span{|s,kappa,n>} and its operator algebra.

Basis indexing is flat row-major, mode-major / excitation-minor:
flat = mode_index*(n_max+1) + n.  All operators are scipy.sparse CSR.

The commutator [a, a^dag] on a truncated ladder fails at the top rung,
so every algebra assertion is restricted to the n < n_max subspace; the
helpers `valid_mask` and `restrict` implement that contract.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .reports import Report

__all__ = [
    "dim", "flat_index", "basis_labels", "ladder", "mode_projector",
    "mode_annihilator", "mode_creator", "frequency_operator", "hamiltonian",
    "momentum", "valid_mask", "restrict", "max_abs", "heisenberg_evolve",
    "average_energy", "algebra_report", "basis_state",
]


def dim(ms, n_max):
    return len(ms) * (n_max + 1)


def flat_index(mode_index, n, n_max):
    """flat = mode_index*(n_max+1) + n, the frozen basis convention."""
    return mode_index * (n_max + 1) + n


def basis_labels(ms, n_max):
    """(mode_index, n) label pair per flat basis index."""
    idx = np.arange(dim(ms, n_max))
    return idx // (n_max + 1), idx % (n_max + 1)


def basis_state(ms, n_max, mode_index, n):
    v = np.zeros(dim(ms, n_max), dtype=complex)
    v[flat_index(mode_index, n, n_max)] = 1.0
    return v


def ladder(n_max):
    """Truncated annihilator a[n, n+1] = sqrt(n+1), shape (n_max+1,)^2."""
    if n_max < 1:
        raise ValueError("n_max >= 1 required")
    n = np.arange(n_max)
    return sp.csr_matrix((np.sqrt(n + 1.0), (n, n + 1)),
                         shape=(n_max + 1, n_max + 1), dtype=complex)


def _half_anticommutator(n_max):
    # diag of (a^dag a + a a^dag)/2 on the truncated ladder; the top rung
    # carries n_max/2 instead of n_max + 1/2 because a|n_max+1> is cut off
    d = np.arange(n_max + 1) + 0.5
    d[n_max] = n_max / 2.0
    return sp.diags(d.astype(complex), format="csr")


def _mode_diag(ms, n_max, values):
    return sp.kron(sp.diags(np.asarray(values, dtype=complex)),
                   sp.identity(n_max + 1, dtype=complex), format="csr")


def mode_projector(ms, mode_index, n_max):
    """|s,kappa><s,kappa| (x) 1 for one mode."""
    e = np.zeros(len(ms))
    e[mode_index] = 1.0
    return _mode_diag(ms, n_max, e)


def _as_mode_index(ms, mode):
    if isinstance(mode, (int, np.integer)):
        if not 0 <= mode < len(ms):
            raise ValueError(f"mode index {mode} out of range")
        return int(mode)
    return ms.index_of(mode)


def mode_annihilator(ms, mode, n_max):
    """a_{s,kappa} = |s,kappa><s,kappa| (x) a: acts on one block, kills the rest."""
    i = _as_mode_index(ms, mode)
    a = ladder(n_max)
    n = np.arange(n_max)
    rows = flat_index(i, n, n_max)
    return sp.csr_matrix((a.data, (rows, rows + 1)),
                         shape=(dim(ms, n_max),) * 2, dtype=complex)


def mode_creator(ms, mode, n_max):
    return mode_annihilator(ms, mode, n_max).conj().T.tocsr()


def frequency_operator(ms, n_max):
    """Diagonal operator whose eigenvalues are the mode frequencies."""
    return _mode_diag(ms, n_max, ms.omega)


def hamiltonian(ms, n_max):
    """H = hbar * Omega (x) (a^dag a + a a^dag)/2; eigenvalue hbar*omega*(n+1/2) for n < n_max."""
    return ms.hbar * sp.kron(sp.diags(ms.omega.astype(complex)),
                             _half_anticommutator(n_max), format="csr")


def momentum(ms, n_max):
    """Three components of P = sum hbar*kappa |s,kappa><s,kappa| (x) (a^dag a + a a^dag)/2."""
    h = _half_anticommutator(n_max)
    return [ms.hbar * sp.kron(sp.diags(ms.kappa[:, j].astype(complex)), h,
                              format="csr")
            for j in range(3)]


def valid_mask(ms, n_max):
    """True on basis states with n < n_max (the subspace where the algebra is exact)."""
    _, n = basis_labels(ms, n_max)
    return n < n_max


def restrict(mat, mask):
    """P M P for the projector P onto the masked basis states."""
    d = sp.diags(mask.astype(float))
    out = d @ mat @ d
    return out.tocsr() if sp.issparse(out) else np.asarray(out)


def max_abs(mat):
    if sp.issparse(mat):
        return float(abs(mat).max()) if mat.nnz else 0.0
    m = np.abs(np.asarray(mat))
    return float(m.max()) if m.size else 0.0


def heisenberg_evolve(op, H, t, hbar=1.0):
    """e^{iHt/hbar} op e^{-iHt/hbar} by dense scaling-and-squaring exponential."""
    if op.shape != H.shape:
        raise ValueError("operator/Hamiltonian dimension mismatch")
    u = expm(1j * t / hbar * H.toarray())
    # H is Hermitian, so the inverse is the conjugate transpose
    return sp.csr_matrix(u @ op.toarray() @ u.conj().T)


def average_energy(psi, ms, n_max, *, allow_unnormalized=False):
    """<H> = sum |psi(mode,n)|^2 hbar*omega*(n+1/2) from the basis labels.

    The n = n_max term uses the truncated value hbar*omega*n_max/2 so the
    sum equals the sparse quadratic form <psi|H|psi> for any state.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (dim(ms, n_max),):
        raise ValueError("state dimension mismatch")
    nrm = np.linalg.norm(psi)
    if not allow_unnormalized and abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"state not normalized (norm {nrm!r}); "
                         "pass allow_unnormalized=True to override")
    mode_idx, n = basis_labels(ms, n_max)
    level = np.where(n < n_max, n + 0.5, n_max / 2.0)
    return float(np.sum(np.abs(psi) ** 2 * ms.hbar * ms.omega[mode_idx] * level))


def algebra_report(ms, n_max, tol=1e-12):
    """Check the noncanonical relations on the n < n_max subspace.

    [a_k, a_l^dag] = delta_kl |k><k| (x) 1   (projector, not identity),
    a_k a_l = delta_kl a_k^2,  a_k^dag a_l^dag = delta_kl (a_k^dag)^2,
    and the resolution of identity sum_k [a_k, a_k^dag] = 1.
    """
    mask = valid_mask(ms, n_max)
    ann = [mode_annihilator(ms, i, n_max) for i in range(len(ms))]
    cre = [a.conj().T.tocsr() for a in ann]
    rep = Report(f"noncanonical algebra, {len(ms)} modes, n_max={n_max}")

    dev_comm = dev_ann = dev_cre = 0.0
    comm_sum = sp.csr_matrix((dim(ms, n_max),) * 2, dtype=complex)
    for k in range(len(ms)):
        comm_sum = comm_sum + (ann[k] @ cre[k] - cre[k] @ ann[k])
        for l in range(len(ms)):
            comm = ann[k] @ cre[l] - cre[l] @ ann[k]
            want = mode_projector(ms, k, n_max) if k == l else None
            diff = comm - want if want is not None else comm
            dev_comm = max(dev_comm, max_abs(restrict(diff, mask)))
            if k != l:
                dev_ann = max(dev_ann, max_abs(restrict(ann[k] @ ann[l], mask)))
                dev_cre = max(dev_cre, max_abs(restrict(cre[k] @ cre[l], mask)))
    rep.add("[a_k, a_l+] = delta_kl proj_k (x) 1", dev_comm, tol)
    rep.add("a_k a_l = delta_kl a_k^2", dev_ann, tol)
    rep.add("a_k+ a_l+ = delta_kl (a_k+)^2", dev_cre, tol)
    ident = sp.identity(dim(ms, n_max), dtype=complex, format="csr")
    rep.add("sum_k [a_k, a_k+] = 1",
            max_abs(restrict(comm_sum - ident, mask)), tol)
    return rep
