"""Atom-field couplings and time-dependent perturbation theory.

First order uses the rotating-wave dipole coupling of a two-level atom at the
origin; the emission amplitude per channel is the displayed closed form with
the (e^{-ixt} - 1)/x time integral.  Second order drops the rotating-wave
approximation, couples a generic few-level atom through -(e/m) A.p at x = 0,
and evaluates the standard long-time pair formula

    A = sum_{f,i} conj(F_f) I_i (-2 pi i) deltaT(E_f - E_i)
        sum_m V_fm V_mi / (E_i - E_m + i eta)

directly on the sector occupation bases, so the multi-oscillator closed forms
can be tested against honest matrix elements.  All interaction operators are
block diagonal across sectors by construction.

Atom bases: two-level space is ordered (excited, ground); multilevel spaces
are ordered by the energies list.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from .fields import FieldPoint, field_operator
from .modes import helicity_vectors_many
from .multi import (MultiState, dgamma, embed_identical, embed_product,
                    sector_basis)
from .reports import Report

__all__ = [
    "TwoLevelAtom", "MultiLevelAtom", "synthetic_atom", "AmplitudeResult",
    "delta_T", "rwa_coupling", "rwa_interaction", "first_order_state",
    "EmissionRate", "emission_rate", "MultiEmission", "rate_factor",
    "multi_first_order",
    "second_order_two_quanta", "standard_oracle_two_photon",
    "three_oscillator_identity_check", "two_photon_factor",
    "two_photon_probability",
]

_SIGMA_PLUS = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))
_SIGMA_MINUS = _SIGMA_PLUS.T.tocsr()


@dataclass(frozen=True)
class TwoLevelAtom:
    """Transition frequency omega0, dipole magnitude d, unit orientation u."""

    omega0: float
    d: float
    u: np.ndarray

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (3,) or abs(np.vdot(u, u).real - 1.0) > 1e-12:
            raise ValueError("u must be a unit 3-vector")
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class MultiLevelAtom:
    """Level energies and momentum matrix elements p_bc = <b|p|c>."""

    energies: np.ndarray
    p_elems: dict
    charge: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "energies",
                           np.asarray(self.energies, dtype=float))
        elems = {}
        for (b, c), vec in self.p_elems.items():
            elems[(int(b), int(c))] = np.asarray(vec, dtype=complex)
        n = self.energies.shape[0]
        for (b, c), vec in elems.items():
            if not (0 <= b < n and 0 <= c < n) or vec.shape != (3,):
                raise ValueError(f"bad momentum element ({b}, {c})")
            other = elems.get((c, b))
            if other is None or np.max(np.abs(other - vec.conj())) > 1e-12:
                raise ValueError(f"p_{c}{b} must be the conjugate of p_{b}{c}")
        object.__setattr__(self, "p_elems", elems)

    @property
    def n_levels(self):
        return self.energies.shape[0]

    def momentum_component(self, j):
        """Dense atomic matrix of the j-th cartesian momentum component."""
        n = self.n_levels
        out = np.zeros((n, n), dtype=complex)
        for (b, c), vec in self.p_elems.items():
            out[b, c] = vec[j]
        return out


def synthetic_atom(levels=3, seed=7, spread=1.0):
    """Random Hermitian few-level fixture with all momentum channels open."""
    rng = np.random.default_rng(seed)
    energies = np.sort(rng.uniform(0.0, spread * (levels - 1), size=levels))
    energies[1:] += 0.3 * spread * np.arange(1, levels)  # keep levels separated
    elems = {}
    for b in range(levels):
        elems[(b, b)] = rng.normal(size=3) + 0j
        for c in range(b + 1, levels):
            vec = rng.normal(size=3) + 1j * rng.normal(size=3)
            elems[(b, c)] = vec
            elems[(c, b)] = vec.conj()
    return MultiLevelAtom(energies, elems)


def delta_T(x, T, hbar=1.0):
    """Finite-duration energy kernel sin(x T/(2 hbar))/(pi x); T/(2 pi hbar) at 0."""
    x = np.asarray(x, dtype=float)
    peak = T / (2.0 * math.pi * hbar)
    out = peak * np.sinc(x * peak)
    return float(out) if out.ndim == 0 else out


def _osc_quotient(x, t):
    """(e^{-ixt} - 1)/x, the first-order time integral; equals -it at x = 0."""
    x = np.asarray(x, dtype=float)
    out = -1j * t * np.exp(-0.5j * x * t) * np.sinc(x * t / (2.0 * math.pi))
    return complex(out) if out.ndim == 0 else out


def rwa_coupling(atom, ms):
    """g per mode: i sqrt(1/(2 hbar omega V)) e . u."""
    e_plus, e_minus = helicity_vectors_many(ms.kappa)
    pol = np.where((ms.s == 1)[:, None], e_plus, e_minus)
    return 1j * np.sqrt(1.0 / (2.0 * ms.hbar * ms.omega * ms.volume)) * (pol @ atom.u)


def _lowering_sum(ms, n_max, coeff):
    """sum_k coeff_k a_k as one sparse matrix."""
    n = np.arange(n_max)
    rung = np.sqrt(n + 1.0)
    rows = (np.arange(len(ms))[:, None] * (n_max + 1) + n[None, :]).ravel()
    data = (coeff[:, None] * rung[None, :]).ravel()
    d = ops.dim(ms, n_max)
    return sp.csr_matrix((data, (rows, rows + 1)), shape=(d, d))


def rwa_interaction(atom, ms, n_max, v=None, w=None, M=None):
    """Interaction-picture coupling family t -> H_I(t).

    H_I(t) = hbar omega0 d sum_k (g_k e^{i(omega0-omega_k)t} a_k sigma+ + h.c.)
    on the field (x) atom product, atom ordered (excited, ground).  With a
    vacuum spec v the single-oscillator a_k is replaced by its weighted
    extension and the result maps t to one sparse block per sector k (the
    family never couples different sectors).
    """
    g = rwa_coupling(atom, ms)
    detuning = atom.omega0 - ms.omega
    scale = ms.hbar * atom.omega0 * atom.d

    if v is None:
        def single(t):
            low = _lowering_sum(ms, n_max, g * np.exp(1j * detuning * t))
            return (scale * (sp.kron(low, _SIGMA_PLUS)
                             + sp.kron(low.conj().T, _SIGMA_MINUS))).tocsr()
        return single

    if w is None or M is None:
        raise ValueError("multi-oscillator coupling needs w and M")
    if v.M > M:
        raise ValueError(f"vacuum spec occupies {v.M} sectors, M = {M}")
    d = ops.dim(ms, n_max)

    def multi(t):
        low = _lowering_sum(ms, n_max, g * np.exp(1j * detuning * t))
        blocks = {}
        for k in range(1, M + 1):
            bold_low = w[k] * dgamma(low, sector_basis(d, k))
            blocks[k] = (scale * (sp.kron(bold_low, _SIGMA_PLUS)
                                  + sp.kron(bold_low.conj().T, _SIGMA_MINUS))
                         ).tocsr()
        return blocks
    return multi


def first_order_state(atom, ms, n_max, initial, t):
    """State at time t to first order, initial = field ket (x) excited atom.

    Channel (s, kappa, n+1, ground) acquires
    omega0 d (e^{-i(omega0-omega)t} - 1)/(omega0-omega) Psi_{s,kappa,n}
    sqrt(n+1) conj(g); returned as a vector over field (x) atom in the
    interaction picture.
    """
    initial = np.asarray(initial, dtype=complex)
    d = ops.dim(ms, n_max)
    if initial.shape != (d,):
        raise ValueError("initial state must be a field ket over (mode, n)")
    if abs(np.linalg.norm(initial) - 1.0) > 1e-12:
        raise ValueError("initial field ket must be normalized")

    out = np.zeros(2 * d, dtype=complex)
    out[0::2] = initial  # zeroth order, atom stays excited

    g = rwa_coupling(atom, ms)
    q = _osc_quotient(atom.omega0 - ms.omega, t)
    step = n_max + 1
    src = initial.reshape(len(ms), step)
    n = np.arange(n_max)
    amp = (atom.omega0 * atom.d) * (q * np.conj(g))[:, None] \
        * np.sqrt(n + 1.0)[None, :] * src[:, :n_max]
    rows = 2 * (np.arange(len(ms))[:, None] * step + (n + 1)[None, :]) + 1
    np.add.at(out, rows.ravel(), amp.ravel())
    return out


@dataclass(frozen=True)
class EmissionRate:
    """First-order rate against the uniform-vacuum reference."""

    rate: float
    rate_old: float
    ratio: float
    T: float


def _local_gap(omega, omega0):
    distinct = np.unique(omega)
    if distinct.size < 2:
        return None
    i = np.searchsorted(distinct, omega0)
    lo = max(i - 1, 0)
    hi = min(i + 1, distinct.size - 1)
    gaps = np.diff(distinct[lo:hi + 1])
    return float(np.max(gaps)) if gaps.size else None


def emission_rate(atom, F, ms, T):
    """P = 2 pi omega0^2 d^2 sum_k F(omega_k) |g_k|^2 deltaT(omega0 - omega_k).

    F is the isotropic vacuum weight |Psi_{s,kappa,0}|^2 as a function of
    omega (not required to be normalized here); the reference rate uses
    F = 1 and the ratio estimates F(omega0).
    """
    gap = _local_gap(ms.omega, atom.omega0)
    if gap is not None and T < 1.0 / gap:
        warnings.warn(
            f"duration T = {T:.3g} gives energy resolution coarser than the "
            f"local mode spacing {gap:.3g}; rates may not resolve the spectrum",
            stacklevel=2)
    g2 = np.abs(rwa_coupling(atom, ms)) ** 2
    kernel = delta_T(atom.omega0 - ms.omega, T, ms.hbar)
    pref = 2.0 * math.pi * atom.omega0 ** 2 * atom.d ** 2
    weights = np.asarray(F(ms.omega), dtype=float)
    p_new = pref * float(np.sum(weights * g2 * kernel))
    p_old = pref * float(np.sum(g2 * kernel))
    return EmissionRate(p_new, p_old, p_new / p_old, T)


def _ground_profile_vector(v, ms, n_max):
    if v.phi.shape != (len(ms),):
        raise ValueError("vacuum profile must have one entry per mode")
    phi = np.zeros(ops.dim(ms, n_max), dtype=complex)
    phi[::n_max + 1] = v.phi
    return phi


@dataclass(frozen=True)
class MultiEmission:
    """First-order multi-oscillator correction and its rate bookkeeping."""

    correction: MultiState
    rate_factor: float
    channels: list


def rate_factor(v, w):
    """sum_k k c_k^2 p_k scaling the first-order rate across sectors.

    For c_k = 1/sqrt(k) each k cancels termwise, so the balanced value is
    accumulated as a plain sum of the p_k and stays exact in floats.
    """
    if w.M < v.M:
        raise ValueError(f"weights cover {w.M} sectors, vacuum needs {v.M}")
    if w.is_balanced():
        return float(np.sum(v.p))
    return float(sum(k * w[k] ** 2 * v.p[k - 1] for k in range(1, v.M + 1)))


def multi_first_order(atom, v, ms, w, M, t, n_max=1):
    """First-order state correction from the sector vacuum, plus rate factor.

    The initial state is the excited atom over the k-sector vacua sqrt(p_k)
    phi^k; the correction in sector k is the weighted creator sum applied to
    phi^k, one coherent channel per oscillator slot.  The emission rate picks
    up sum_k k c_k^2 p_k relative to the single-oscillator treatment; for
    c_k = 1/sqrt(k) the k cancels algebraically and the factor is sum_k p_k.
    """
    if v.M > M:
        raise ValueError(f"vacuum spec occupies {v.M} sectors, M = {M}")
    phi = _ground_profile_vector(v, ms, n_max)
    d = phi.shape[0]
    g = rwa_coupling(atom, ms)
    q = _osc_quotient(atom.omega0 - ms.omega, t)

    sectors = {}
    channels = []
    for k in range(1, v.M + 1):
        sb = sector_basis(d, k)
        base = embed_identical(phi, sb)
        vec = np.zeros(len(sb), dtype=complex)
        root_p = math.sqrt(v.p[k - 1])
        for i in range(len(ms)):
            if v.phi[i] == 0:
                continue
            raised = (w[k] * dgamma(ops.mode_creator(ms, i, n_max),
                                    sector_basis(d, k))) @ base
            amp = atom.omega0 * atom.d * q[i] * np.conj(g[i]) * root_p
            vec += amp * raised
            channels.append((k, i, complex(amp * np.linalg.norm(raised))))
        sectors[k] = vec

    return MultiEmission(MultiState(d, sectors), rate_factor(v, w), channels)


def _resolve_mode(ms, target):
    if isinstance(target, (int, np.integer)):
        if not 0 <= target < len(ms):
            raise ValueError(f"mode index {target} out of range")
        return int(target)
    if hasattr(target, "s") and hasattr(target, "kappa"):
        return ms.index_of(target)
    s, kappa = target
    return ms.index_of_sk(s, kappa)


def _pair_formula(V, energies, bra, ket, T, hbar, eta, allow_resonant):
    """Long-time second-order amplitude between H0 eigen-component bundles."""
    V = sp.csc_matrix(V)
    Vr = V.tocsr()
    total = 0j
    f_support = np.flatnonzero(np.abs(bra) > 0)
    for i in np.flatnonzero(np.abs(ket) > 0):
        col = V.getcol(i).toarray().ravel()
        m_support = np.flatnonzero(col)
        if m_support.size == 0:
            continue
        gap = energies[i] - energies[m_support]
        if not allow_resonant and np.any(np.abs(gap) <= eta):
            raise ValueError(
                "energy denominator within eta of zero; pass "
                "allow_resonant=True to keep the i*eta regularization")
        y = col[m_support] / (gap + 1j * eta)
        x = Vr[f_support][:, m_support] @ y
        kern = delta_T(energies[f_support] - energies[i], T, hbar)
        total += np.sum(np.conj(bra[f_support]) * (-2j * math.pi) * kern * x) \
            * ket[i]
    return complex(total)


def _two_quanta_sector(atom, v, ms, w, k, targets, T, n_max, a_state, b_state,
                       eta, allow_resonant):
    """p-stripped sector-k two-quanta amplitude by the pair formula.

    Returns (ordered, channel): `ordered` projects on the raw product bra
    (excited targets and ground-profile spectators, no symmetric
    renormalization), which is the convention of the displayed closed forms;
    `channel` projects on the normalized symmetric channel state.
    """
    i1, i2 = (_resolve_mode(ms, targets[0]), _resolve_mode(ms, targets[1]))
    if i1 == i2:
        raise ValueError("target channels must be distinct modes")
    d = ops.dim(ms, n_max)
    sb = sector_basis(d, k)
    nl = atom.n_levels

    field_ops = [w[k] * dgamma(
        field_operator(ms, n_max, "A", j, FieldPoint()), sb) for j in range(3)]
    V = None
    for j in range(3):
        term = sp.kron(field_ops[j],
                       sp.csr_matrix(atom.momentum_component(j)))
        V = term if V is None else V + term
    V = (-(atom.charge / atom.mass)) * V

    h_diag = dgamma(ops.hamiltonian(ms, n_max), sb).diagonal().real
    energies = np.add.outer(h_diag, atom.energies).ravel()

    phi = _ground_profile_vector(v, ms, n_max)
    e_a = np.zeros(nl)
    e_a[a_state] = 1.0
    ket = np.kron(embed_identical(phi, sb), e_a)

    excited = [np.zeros(d, dtype=complex) for _ in range(2)]
    excited[0][ops.flat_index(i1, 1, n_max)] = 1.0
    excited[1][ops.flat_index(i2, 1, n_max)] = 1.0
    bra_field = embed_product(excited + [phi] * (k - 2), sb)
    e_b = np.zeros(nl)
    e_b[b_state] = 1.0
    bra = np.kron(bra_field, e_b)

    ordered = _pair_formula(V, energies, bra, ket, T, ms.hbar, eta,
                            allow_resonant)
    channel = ordered / np.linalg.norm(bra_field)
    return ordered, channel


@dataclass(frozen=True)
class AmplitudeResult:
    """Second-order amplitude with its channel bookkeeping.

    `value` follows the closed-form convention (raw product bra, one ordered
    target pair); `channel_value` is the amplitude onto the normalized
    symmetric channel, whose modulus squared is what rate sums add up.
    """

    value: complex
    channel_value: complex
    sector: int
    modes: tuple
    atom_states: tuple
    T: float
    eta: float


def second_order_two_quanta(atom, v, ms, w, M, targets, T, *, n_max=2,
                            a_state=0, b_state=0, eta=1e-6,
                            allow_resonant=False):
    """Amplitude for emitting one quantum in each target mode from the
    2-oscillator vacuum sector, no rotating-wave approximation.

    Equals -c_2^2 sqrt(p_2) (2 pi i e^2/m^2) w_1 w_2 phi_1 phi_2 times the
    two-ordering intermediate sum times deltaT, and is computed here by the
    generic pair formula on the occupation basis rather than from that
    closed form.
    """
    if M < 2:
        raise ValueError("two-quanta emission needs M >= 2")
    if v.M > M:
        raise ValueError(f"vacuum spec occupies {v.M} sectors, M = {M}")
    i1, i2 = (_resolve_mode(ms, targets[0]), _resolve_mode(ms, targets[1]))
    p2 = v.p[1] if v.M >= 2 else 0.0
    if p2 == 0.0:
        return AmplitudeResult(0j, 0j, 2, (i1, i2), (a_state, b_state), T, eta)
    ordered, channel = _two_quanta_sector(
        atom, v, ms, w, 2, targets, T, n_max, a_state, b_state, eta,
        allow_resonant)
    root = math.sqrt(p2)
    return AmplitudeResult(root * ordered, root * channel, 2, (i1, i2),
                           (a_state, b_state), T, eta)


def standard_oracle_two_photon(atom, ms, targets, T, *, a_state=0, b_state=0,
                               eta=1e-6, allow_resonant=False):
    """Canonical-formalism two-photon amplitude, written out directly.

    -2 pi i (e^2/m^2) w_1 w_2 deltaT(E_a - E_b - hw_1 - hw_2) times the sum
    over intermediate levels c of both emission orderings with denominators
    E_a - E_c - hw + i eta.  Serves as the independent oracle for the
    sector machinery.
    """
    i1, i2 = (_resolve_mode(ms, targets[0]), _resolve_mode(ms, targets[1]))
    if i1 == i2:
        raise ValueError("target channels must be distinct modes")
    e_plus, e_minus = helicity_vectors_many(ms.kappa)
    pol = np.where((ms.s == 1)[:, None], e_plus, e_minus)
    e1, e2 = np.conj(pol[i1]), np.conj(pol[i2])
    w1 = math.sqrt(ms.hbar / (2.0 * ms.omega[i1] * ms.volume))
    w2 = math.sqrt(ms.hbar / (2.0 * ms.omega[i2] * ms.volume))
    hw1, hw2 = ms.hbar * ms.omega[i1], ms.hbar * ms.omega[i2]
    E = atom.energies

    total = 0j
    for c in range(atom.n_levels):
        p_bc = atom.p_elems.get((b_state, c), np.zeros(3))
        p_ca = atom.p_elems.get((c, a_state), np.zeros(3))
        # both orderings: quantum 1 emitted first, then quantum 2 first
        gap1 = E[a_state] - E[c] - hw1
        gap2 = E[a_state] - E[c] - hw2
        if not allow_resonant and (abs(gap1) <= eta or abs(gap2) <= eta):
            raise ValueError(
                "energy denominator within eta of zero; pass "
                "allow_resonant=True to keep the i*eta regularization")
        total += (e2 @ p_bc) * (e1 @ p_ca) / (gap1 + 1j * eta)
        total += (e1 @ p_bc) * (e2 @ p_ca) / (gap2 + 1j * eta)

    kern = delta_T(E[a_state] - E[b_state] - hw1 - hw2, T, ms.hbar)
    pref = -2j * math.pi * (atom.charge ** 2 / atom.mass ** 2) * w1 * w2
    return pref * kern * total


def three_oscillator_identity_check(atom, v, ms, w, targets, T, *, n_max=2,
                                    a_state=0, b_state=0, eta=1e-6,
                                    allow_resonant=False, tol=1e-10):
    """Sector-3 amplitude with one spectator equals the sector-2 one.

    Verifies c_3^{-2} A_3 = c_2^{-2} A_2 with the sqrt(p_k) factors divided
    out, and that the normalized-channel amplitudes carry the expected
    squared ratio 3 (the number of excited-pair placements among 3 slots).
    """
    if v.M < 3 or v.p[1] == 0 or v.p[2] == 0:
        raise ValueError("need nonzero 2- and 3-sector vacuum weights")
    A2o, A2c = _two_quanta_sector(atom, v, ms, w, 2, targets, T, n_max,
                                  a_state, b_state, eta, allow_resonant)
    A3o, A3c = _two_quanta_sector(atom, v, ms, w, 3, targets, T, n_max,
                                  a_state, b_state, eta, allow_resonant)
    rep = Report("two-quanta emission from the 3-oscillator sector")
    rep.note(f"A2 = {A2o!r}")
    rep.note(f"A3 = {A3o!r}")
    rep.add("c3^-2 A3 = c2^-2 A2 (p-stripped)",
            abs(A3o / w[3] ** 2 - A2o / w[2] ** 2), tol)
    ratio = (A3c / w[3] ** 2) / (A2c / w[2] ** 2)
    rep.add("squared channel ratio = 3 (pair placements among 3 slots)",
            abs(abs(ratio) ** 2 - 3.0), tol)
    return rep


def two_photon_factor(v, w):
    """Sector sum 2 sum_n C(n,2) c_n^4 p_n scaling the two-quanta probability.

    For c_n = 1/sqrt(n) the terms collapse to (n-1)/n p_n and the factor is
    computed as 1 - sum_n p_n/n directly (exact arithmetic for the simple
    cases); the general expression is kept for arbitrary weights.
    """
    if w.is_balanced():
        return float(1.0 - sum(v.p[n - 1] / n for n in range(1, v.M + 1)))
    return float(sum(2.0 * math.comb(n, 2) * w[n] ** 4 * v.p[n - 1]
                     for n in range(1, v.M + 1)))


def two_photon_probability(v, w, per_channel_old, targets, ms=None):
    """Probability of a distinct-mode two-quanta emission.

    two_photon_factor(v, w) times |phi_1|^2 |phi_2|^2 times the standard
    per-channel probability.  With balanced weights the factor reduction
    1 - sum p_n/n is cross-checked against the general sector sum.
    """
    if per_channel_old < 0:
        raise ValueError("per-channel reference probability must be >= 0")
    idx = []
    for target in targets:
        if isinstance(target, (int, np.integer)):
            idx.append(int(target))
        else:
            if ms is None:
                raise ValueError("mode targets need ms to resolve (s, kappa)")
            idx.append(_resolve_mode(ms, target))
    if idx[0] == idx[1]:
        raise ValueError("target channels must be distinct modes")
    if not (0 <= idx[0] < v.phi.shape[0] and 0 <= idx[1] < v.phi.shape[0]):
        raise ValueError("target index out of range for the vacuum profile")
    factor = two_photon_factor(v, w)
    if w.is_balanced():
        general = float(sum(2.0 * math.comb(n, 2) * w[n] ** 4 * v.p[n - 1]
                            for n in range(1, v.M + 1)))
        if abs(general - factor) > 1e-12:
            raise AssertionError(
                f"balanced-weight reduction broke: {general} vs {factor}")
    return factor * abs(v.phi[idx[0]]) ** 2 * abs(v.phi[idx[1]]) ** 2 \
        * float(per_channel_old)
