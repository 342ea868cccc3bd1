"""Symmetric multi-oscillator sectors and weighted operator extensions.

The multi-oscillator space is a direct sum over k = 1..M of symmetric k-fold
products of the single-oscillator space.  Sectors are stored in occupation
basis: a sorted k-tuple of flat single-oscillator indices stands for the
normalized permutation-symmetric product state.  On that basis the sum of
one-slot copies of an operator X acts by the usual bosonic rule
sqrt(m_q) sqrt(m_p + 1) per (p, q) matrix element, implemented in `dgamma`.

A weighted ("bold") extension scales sector k by a constant c_k.  The choice
c_k = 1/sqrt(k) is singled out by the resolution of identity; it is kept as a
runtime parameter so the general case can be exercised too.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from .fields import _tail_bound, coherent_state
from .reports import Report

__all__ = [
    "SectorBasis", "sector_basis", "sector_dimension", "ExtensionWeights",
    "MultiState", "BoldOperator", "dgamma", "extend_operator",
    "bold_mode_identity", "valid_sector_mask", "bold_algebra_report",
    "embed_identical", "embed_product", "generalized_coherent",
    "coherent_energies", "CoherentEnergies", "VacuumSpec", "vacuum_state",
    "vacuum_energy", "sector_energy_spectrum_demo", "entangled_pair",
]


def sector_dimension(d, k):
    return math.comb(d + k - 1, k)


@lru_cache(maxsize=None)
def _occupation_list(d, k):
    return tuple(itertools.combinations_with_replacement(range(d), k))


class SectorBasis:
    """Occupation basis of the symmetric k-fold product of a d-dim space."""

    def __init__(self, d, k):
        if d < 1 or k < 1:
            raise ValueError("d >= 1 and k >= 1 required")
        self.d = d
        self.k = k
        self.occupations = _occupation_list(d, k)
        self.index = {m: i for i, m in enumerate(self.occupations)}

    def __len__(self):
        return len(self.occupations)


@lru_cache(maxsize=None)
def sector_basis(d, k):
    return SectorBasis(d, k)


class ExtensionWeights:
    """Per-sector scale factors c_k > 0, k = 1..M."""

    def __init__(self, c):
        self.c = {int(k): float(v) for k, v in dict(c).items()}
        if any(v <= 0 for v in self.c.values()):
            raise ValueError("weights must be positive")

    @classmethod
    def balanced(cls, M):
        """c_k = 1/sqrt(k), the choice that restores the resolution of identity."""
        return cls({k: 1.0 / math.sqrt(k) for k in range(1, M + 1)})

    @classmethod
    def constant(cls, M, value=1.0):
        return cls({k: value for k in range(1, M + 1)})

    def __getitem__(self, k):
        return self.c[k]

    @property
    def M(self):
        return max(self.c)

    def is_balanced(self, tol=1e-12):
        return all(abs(v * math.sqrt(k) - 1.0) <= tol for k, v in self.c.items())


@dataclass
class MultiState:
    """Sector-indexed state: k -> coefficient vector over sector_basis(d, k)."""

    d: int
    sectors: dict

    def __post_init__(self):
        self.sectors = {int(k): np.asarray(v, dtype=complex)
                        for k, v in self.sectors.items()}
        for k, v in self.sectors.items():
            if k < 1 or v.shape != (sector_dimension(self.d, k),):
                raise ValueError(f"sector {k} has wrong dimension {v.shape}")

    def norm(self):
        return math.sqrt(sum(float(np.vdot(v, v).real)
                             for v in self.sectors.values()))

    def dot(self, other):
        """<self|other> over shared sectors."""
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        return sum(complex(np.vdot(self.sectors[k], other.sectors[k]))
                   for k in self.sectors if k in other.sectors)

    def csv_rows(self, threshold=0.0):
        """(k, occupation, Re, Im) rows; occupation joins flat indices with '|'."""
        rows = []
        for k in sorted(self.sectors):
            sb = sector_basis(self.d, k)
            for m, z in zip(sb.occupations, self.sectors[k]):
                if abs(z) > threshold:
                    rows.append((k, "|".join(map(str, m)), z.real, z.imag))
        return rows


@dataclass
class BoldOperator:
    """Block-diagonal operator: one sparse block per sector k."""

    blocks: dict

    def __matmul__(self, other):
        if isinstance(other, MultiState):
            return self.apply(other)
        shared = self.blocks.keys() & other.blocks.keys()
        return BoldOperator({k: self.blocks[k] @ other.blocks[k] for k in shared})

    def __add__(self, other):
        keys = self.blocks.keys() | other.blocks.keys()
        return BoldOperator({
            k: self.blocks.get(k, 0) + other.blocks.get(k, 0) for k in keys})

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        return BoldOperator({k: scalar * b for k, b in self.blocks.items()})

    def adjoint(self):
        return BoldOperator({k: b.conj().T.tocsr() for k, b in self.blocks.items()})

    def commutator(self, other):
        return self @ other - other @ self

    def apply(self, state):
        return MultiState(state.d, {
            k: self.blocks[k] @ v for k, v in state.sectors.items()
            if k in self.blocks})

    def expectation(self, state):
        return state.dot(self.apply(state))

    def max_abs(self, masks=None):
        """Largest entry magnitude, optionally restricted per sector."""
        best = 0.0
        for k, b in self.blocks.items():
            m = ops.restrict(b, masks[k]) if masks is not None else b
            best = max(best, ops.max_abs(m))
        return best


def dgamma(X, sb):
    """Sum over slots of one-oscillator X, in the occupation basis of sb."""
    X = sp.csc_matrix(X)
    if X.shape != (sb.d, sb.d):
        raise ValueError("operator dimension does not match sector basis")
    rows, cols, vals = [], [], []
    for j, m in enumerate(sb.occupations):
        for q, mq in Counter(m).items():
            lo, hi = X.indptr[q], X.indptr[q + 1]
            stripped = list(m)
            stripped.remove(q)
            for p, x in zip(X.indices[lo:hi], X.data[lo:hi]):
                if p == q:
                    # exact integer weight keeps diagonal sector energies
                    # bit-identical to m * X_qq multiples
                    amp = x * mq
                else:
                    amp = x * math.sqrt(mq) * math.sqrt(stripped.count(p) + 1)
                rows.append(sb.index[tuple(sorted(stripped + [p]))])
                cols.append(j)
                vals.append(amp)
    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(len(sb),) * 2, dtype=complex)


def extend_operator(X, w, M):
    """Bold extension: sector k acts as c_k times the sum of one-slot copies of X."""
    if M < 1:
        raise ValueError("M >= 1 required")
    d = X.shape[0]
    return BoldOperator({k: w[k] * dgamma(X, sector_basis(d, k))
                         for k in range(1, M + 1)})


def bold_mode_identity(ms, n_max, mode, w, M):
    """The commutator [bold a, bold a+] of one mode: c_k^2 times the extended projector."""
    proj = ops.mode_projector(ms, mode, n_max)
    d = proj.shape[0]
    return BoldOperator({k: w[k] ** 2 * dgamma(proj, sector_basis(d, k))
                         for k in range(1, M + 1)})


def valid_sector_mask(sb, n_max):
    """Occupations whose every constituent has ladder level n < n_max."""
    return np.array([all(b % (n_max + 1) < n_max for b in m)
                     for m in sb.occupations])


def bold_identity(d, M):
    return BoldOperator({k: sp.identity(sector_dimension(d, k), format="csr",
                                        dtype=complex)
                         for k in range(1, M + 1)})


def bold_algebra_report(ms, n_max, w, M, tol=1e-12):
    """Commutation relations of the weighted extensions, sector by sector.

    Equalities are asserted on occupations with all levels below n_max.  The
    two deliberate failures of the canonical algebra (the mode identities are
    not idempotent, and annihilators of distinct modes have a nonvanishing
    product) are reported as witnesses that must EXCEED their threshold.
    """
    d = ops.dim(ms, n_max)
    masks = {k: valid_sector_mask(sector_basis(d, k), n_max)
             for k in range(1, M + 1)}
    ann = [extend_operator(ops.mode_annihilator(ms, i, n_max), w, M)
           for i in range(len(ms))]
    cre = [a.adjoint() for a in ann]
    one = [bold_mode_identity(ms, n_max, i, w, M) for i in range(len(ms))]

    rep = Report(f"bold algebra, {len(ms)} modes, n_max={n_max}, M={M}")
    rep.note("weights: " + ", ".join(
        f"c_{k}={w[k]:.6g}" for k in range(1, M + 1)))

    dev_ca = dev_aa = dev_cc = 0.0
    for i in range(len(ms)):
        for j in range(len(ms)):
            comm = ann[i].commutator(cre[j])
            if i == j:
                comm = comm - one[i]
            dev_ca = max(dev_ca, comm.max_abs(masks))
            dev_aa = max(dev_aa, ann[i].commutator(ann[j]).max_abs(masks))
            dev_cc = max(dev_cc, cre[i].commutator(cre[j]).max_abs(masks))
    rep.add("[bold a_k, bold a_l+] = delta_kl bold1_k", dev_ca, tol)
    rep.add("[bold a_k, bold a_l] = 0", dev_aa, tol)
    rep.add("[bold a_k+, bold a_l+] = 0", dev_cc, tol)

    total = one[0]
    for o in one[1:]:
        total = total + o
    scaled = BoldOperator({
        k: k * w[k] ** 2 * sp.identity(sector_dimension(d, k), dtype=complex,
                                       format="csr")
        for k in range(1, M + 1)})
    rep.add("sum_k bold1_k = k c_k^2 per sector", (total - scaled).max_abs(), tol)
    if w.is_balanced():
        rep.add("sum_k bold1_k = identity (c_k = 1/sqrt(k))",
                (total - bold_identity(d, M)).max_abs(), tol)
    else:
        rep.add("sum_k bold1_k differs from identity (weights not 1/sqrt(k))",
                (total - bold_identity(d, M)).max_abs(), 0.1, at_least=True)

    if M >= 2:
        wit = max((o @ o - o).max_abs() for o in one)
        rep.add("bold1^2 != bold1 (witness in sectors k >= 2)", wit, 0.1,
                at_least=True)
        if len(ms) >= 2:
            wit = max((ann[i] @ ann[j]).max_abs()
                      for i in range(len(ms)) for j in range(len(ms)) if i != j)
            rep.add("bold a_k bold a_l != 0 for k != l (no single-mode shortcut)",
                    wit, 0.1, at_least=True)
    return rep


def embed_identical(v, sb):
    """Occupation coefficients of the k-fold product of one vector with itself."""
    v = np.asarray(v, dtype=complex)
    out = np.zeros(len(sb), dtype=complex)
    support = [int(b) for b in np.flatnonzero(v)]
    logk = math.lgamma(sb.k + 1)
    for m in itertools.combinations_with_replacement(support, sb.k):
        mult = Counter(m)
        weight = math.exp(0.5 * (logk - sum(math.lgamma(c + 1)
                                            for c in mult.values())))
        out[sb.index[m]] = weight * np.prod([v[b] ** c for b, c in mult.items()])
    return out


def _permanent(mat):
    k = mat.shape[0]
    return sum(np.prod([mat[i, s[i]] for i in range(k)])
               for s in itertools.permutations(range(k)))


def embed_product(vectors, sb):
    """Occupation coefficients of the symmetrized product of k distinct vectors.

    Coefficient on occupation m is perm(M)/sqrt(k! prod m_b!) with
    M_ij = vectors[i][m_j]; this is the projection of the raw tensor product
    onto the symmetric subspace, so the result may have norm below 1.
    """
    vs = [np.asarray(v, dtype=complex) for v in vectors]
    if len(vs) != sb.k:
        raise ValueError(f"need exactly {sb.k} vectors")
    support = set()
    for v in vs:
        support.update(int(b) for b in np.flatnonzero(v))
    out = np.zeros(len(sb), dtype=complex)
    for m in itertools.combinations_with_replacement(sorted(support), sb.k):
        mat = np.array([[v[b] for b in m] for v in vs])
        norm = math.exp(0.5 * (math.lgamma(sb.k + 1)
                               + sum(math.lgamma(c + 1)
                                     for c in Counter(m).values())))
        out[sb.index[m]] = _permanent(mat) / norm
    return out


def _as_f_map(f, M):
    fk = np.zeros(M + 1, dtype=complex)
    if isinstance(f, dict):
        for k, v in f.items():
            fk[int(k)] = v
    else:
        arr = np.asarray(f, dtype=complex)
        if arr.shape != (M,):
            raise ValueError("f must list one amplitude per sector 1..M")
        fk[1:] = arr
    total = np.sum(np.abs(fk) ** 2)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"sum |f_k|^2 = {total!r}, expected 1")
    return fk


def generalized_coherent(spec, f, w, M):
    """Eigenstate of the bold annihilators: sector k carries f_k times the
    k-fold product of per-mode coherent states with parameter alpha/(k c_k),
    combined over modes with the amplitudes Phi of spec."""
    ms, n_max = spec.ms, spec.n_max
    fk = _as_f_map(f, M)
    d = ops.dim(ms, n_max)
    step = n_max + 1
    sectors = {}
    for k in range(1, M + 1):
        sb = sector_basis(d, k)
        vec = np.zeros(len(sb), dtype=complex)
        if fk[k] != 0:
            for mode in range(len(ms)):
                if spec.Phi[mode] == 0:
                    continue
                beta = spec.alpha[mode] / (k * w[k])
                tail = _tail_bound(beta, n_max)
                if tail >= spec.tail_tol:
                    raise ValueError(
                        f"sector {k} coherent tail {tail:.3e} >= "
                        f"{spec.tail_tol:.1e} (parameter {abs(beta):.3g})")
                chi = np.zeros(d, dtype=complex)
                chi[mode * step:(mode + 1) * step] = coherent_state(
                    beta, n_max, spec.tail_tol)
                vec += spec.Phi[mode] * embed_identical(chi, sb)
            vec *= fk[k]
        sectors[k] = vec
    return MultiState(d, sectors)


@dataclass(frozen=True)
class CoherentEnergies:
    """Closed-form and matrix averages of the two energy operators.

    `script` is the generator of time translations (weight-1 extension of the
    one-oscillator H); `bold` is the field energy built from the weighted
    extensions, V/2 integral of E.E + B.B.
    """

    script_closed: float
    bold_closed: float
    script_matrix: float
    bold_matrix: float
    vacuum_difference: float | None


def _bold_field_energy(ms, n_max, w, M):
    blocks = None
    for i in range(len(ms)):
        a = extend_operator(ops.mode_annihilator(ms, i, n_max), w, M)
        c = a.adjoint()
        term = 0.5 * ms.hbar * ms.omega[i] * (c @ a + a @ c)
        blocks = term if blocks is None else blocks + term
    return blocks


def coherent_energies(state, spec, f, w):
    """Both energy averages on a generalized coherent state.

    Closed forms: sum over modes of hbar omega |Phi|^2 times
      |alpha|^2 sum_k |f_k|^2/(k c_k^2) + (1/2) sum_k k |f_k|^2       (script)
      |alpha|^2 + (1/2) sum_k k c_k^2 |f_k|^2                         (bold)
    For balanced weights the two differ exactly by the vacuum parts, and
    `vacuum_difference` reports that residual.
    """
    ms, n_max = spec.ms, spec.n_max
    M = max(state.sectors)
    fk = _as_f_map(f, M)
    p2 = np.abs(fk) ** 2
    ks = np.arange(M + 1)
    inv = np.zeros(M + 1)
    inv[1:] = [1.0 / (k * w[k] ** 2) for k in range(1, M + 1)]
    wphi = ms.hbar * ms.omega * np.abs(spec.Phi) ** 2
    a2 = np.abs(spec.alpha) ** 2

    script_closed = float(np.sum(wphi * a2) * np.sum(p2 * inv)
                          + 0.5 * np.sum(wphi) * np.sum(ks * p2))
    kc2 = np.zeros(M + 1)
    kc2[1:] = [k * w[k] ** 2 for k in range(1, M + 1)]
    bold_closed = float(np.sum(wphi * a2) + 0.5 * np.sum(wphi) * np.sum(kc2 * p2))

    ones = ExtensionWeights.constant(M)
    script_op = extend_operator(ops.hamiltonian(ms, n_max), ones, M)
    bold_op = _bold_field_energy(ms, n_max, w, M)
    script_matrix = float(script_op.expectation(state).real)
    bold_matrix = float(bold_op.expectation(state).real)

    vac_diff = None
    if w.is_balanced():
        vac = 0.5 * np.sum(wphi) * float(np.sum(ks * p2) - np.sum(p2))
        vac_diff = float(abs((script_closed - bold_closed) - vac))
    return CoherentEnergies(script_closed, bold_closed,
                            script_matrix, bold_matrix, vac_diff)


@dataclass(frozen=True)
class VacuumSpec:
    """Identical per-oscillator vacuum profile phi with sector weights p_k."""

    phi: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=complex))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if abs(np.sum(np.abs(self.phi) ** 2) - 1.0) > 1e-12:
            raise ValueError("sum |phi|^2 must be 1")
        if np.any(self.p < 0) or abs(np.sum(self.p) - 1.0) > 1e-12:
            raise ValueError("p must be a probability vector over k = 1..M")

    @property
    def M(self):
        return len(self.p)


def _ground_profile(v, ms, n_max):
    if v.phi.shape != (len(ms),):
        raise ValueError("phi must have one entry per mode")
    phi = np.zeros(ops.dim(ms, n_max), dtype=complex)
    phi[::n_max + 1] = v.phi
    return phi


def vacuum_state(v, ms, n_max):
    """sqrt(p_k) times the k-fold product of the ground profile, k = 1..M."""
    phi = _ground_profile(v, ms, n_max)
    d = phi.shape[0]
    return MultiState(d, {
        k: math.sqrt(v.p[k - 1]) * embed_identical(phi, sector_basis(d, k))
        for k in range(1, v.M + 1)})


def vacuum_energy(v, ms, n_max, M=None, cross_check=False):
    """Mean oscillator count times mean one-oscillator energy: sum_k k p_k <phi|H|phi>."""
    M = v.M if M is None else M
    if M != v.M:
        raise ValueError("M does not match the length of p")
    h_bar_phi = float(np.sum(np.abs(v.phi) ** 2 * 0.5 * ms.hbar * ms.omega))
    n_bar = float(np.sum(np.arange(1, M + 1) * v.p))
    value = n_bar * h_bar_phi
    if cross_check:
        state = vacuum_state(v, ms, n_max)
        script_op = extend_operator(ops.hamiltonian(ms, n_max),
                                    ExtensionWeights.constant(M), M)
        matrix = float(script_op.expectation(state).real)
        if abs(matrix - value) > 1e-12 * max(1.0, abs(value)):
            raise AssertionError(f"closed form {value} != matrix {matrix}")
    return value


def sector_energy_spectrum_demo(ms, n_max=3, mode=0):
    """Energies separating k-oscillator states from higher ladder levels.

    Returns (label, oscillator count, energy) rows for the ground and excited
    configurations of one mode: the second excited single oscillator sits at
    2.5 hbar omega while a pair of first-excited oscillators sits at 3.
    """
    d = ops.dim(ms, n_max)
    script_op = extend_operator(ops.hamiltonian(ms, n_max),
                                ExtensionWeights.constant(2), 2)

    def energy(k, levels):
        sb = sector_basis(d, k)
        vec = np.zeros(len(sb), dtype=complex)
        occ = tuple(sorted(ops.flat_index(mode, n, n_max) for n in levels))
        vec[sb.index[occ]] = 1.0
        state = MultiState(d, {k: vec})
        return float(script_op.expectation(state).real)

    return [
        ("one oscillator, ground", 1, energy(1, [0])),
        ("two oscillators, both ground", 2, energy(2, [0, 0])),
        ("one oscillator, second excited", 1, energy(1, [2])),
        ("two oscillators, both first excited", 2, energy(2, [1, 1])),
    ]


def entangled_pair(ms, n_max, entries, n=1, sign=1):
    """Two-oscillator entangled state over opposite helicities.

    entries: iterable of (kappa_1, kappa_2, amplitude); the state adds
    amplitude * (|+,k1,n>|-,k2,n> + sign * |-,k1,n>|+,k2,n>) and is
    normalized at the end.  The amplitude function must satisfy
    psi(k2, k1) = sign * psi(k1, k2) whenever both orderings appear.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    d = ops.dim(ms, n_max)
    sb = sector_basis(d, 2)
    vec = np.zeros(len(sb), dtype=complex)
    seen = {}
    for k1, k2, amp in entries:
        key1, key2 = tuple(np.asarray(k1)), tuple(np.asarray(k2))
        if (key2, key1) in seen and abs(seen[(key2, key1)] - sign * amp) > 1e-12:
            raise ValueError("amplitudes violate the exchange symmetry")
        seen[(key1, key2)] = amp
        plus1 = ops.flat_index(ms.index_of_sk(+1, k1), n, n_max)
        minus2 = ops.flat_index(ms.index_of_sk(-1, k2), n, n_max)
        minus1 = ops.flat_index(ms.index_of_sk(-1, k1), n, n_max)
        plus2 = ops.flat_index(ms.index_of_sk(+1, k2), n, n_max)
        for b1, b2, a in ((plus1, minus2, amp), (minus1, plus2, sign * amp)):
            occ = tuple(sorted((b1, b2)))
            # <m|x (x) y> = 1/sqrt(2) per ordered product for distinct b1, b2
            vec[sb.index[occ]] += a * (1.0 if b1 == b2 else 1.0 / math.sqrt(2))
    state = MultiState(d, {2: vec})
    nrm = state.norm()
    if nrm == 0:
        raise ValueError("state is identically zero")
    state.sectors[2] /= nrm
    return state
