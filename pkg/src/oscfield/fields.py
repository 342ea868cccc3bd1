"""Mode-sum field operators on the single-oscillator space.

A carries weight sqrt(hbar/(2*omega*V)), E and B carry sqrt(hbar*omega/(2V));
the annihilator part of every mode term has phase e^{-i(omega*t - kappa.x)}.
B replaces the polarization vector e by unit_kappa x e = -i*s*e.

Because distinct (s, kappa) blocks annihilate each other, the energy density
E.E + B.B is position-independent as an operator, so spatial integration is
just multiplication by the box volume.  That identity is exact even on the
truncated ladder; see `energy_momentum_identity_check`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from .modes import helicity_vectors_many
from .reports import Report

__all__ = [
    "FieldPoint", "CoherentFieldSpec", "field_operator", "coherent_state",
    "coherent_field_average", "coherent_energy",
    "energy_momentum_identity_check", "eb_commutator", "EBCommutator",
]

_COMPONENTS = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


@dataclass(frozen=True)
class FieldPoint:
    """A spacetime sample point (t, x)."""

    t: float = 0.0
    x: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(c) for c in self.x))
        if len(self.x) != 3:
            raise ValueError("position must be a 3-vector")


def _component_index(component):
    try:
        return _COMPONENTS[component]
    except (KeyError, TypeError):
        raise ValueError("component must be one of 'x', 'y', 'z'") from None


def _ann_coefficients(ms, which, p):
    """(n_modes, 3) coefficients of a_k per component; creator part is the conjugate."""
    e_plus, e_minus = helicity_vectors_many(ms.kappa)
    pol = np.where((ms.s == 1)[:, None], e_plus, e_minus)
    phase = np.exp(-1j * (ms.omega * p.t - ms.kappa @ np.asarray(p.x)))
    if which == "A":
        w = np.sqrt(ms.hbar / (2.0 * ms.omega * ms.volume))
        return w[:, None] * pol * phase[:, None]
    if which == "E":
        w = np.sqrt(ms.hbar * ms.omega / (2.0 * ms.volume))
        return 1j * w[:, None] * pol * phase[:, None]
    if which == "B":
        w = np.sqrt(ms.hbar * ms.omega / (2.0 * ms.volume))
        # unit_kappa x e_s = -i s e_s for helicity polarizations
        return 1j * w[:, None] * (-1j * ms.s[:, None]) * pol * phase[:, None]
    raise ValueError("which must be one of 'A', 'E', 'B'")


def field_operator(ms, n_max, which, component, p):
    """One cartesian component of the A, E or B mode sum at the point p."""
    if n_max < 1:
        raise ValueError("n_max >= 1 required")
    c = _ann_coefficients(ms, which, p)[:, _component_index(component)]
    n = np.arange(n_max)
    rung = np.sqrt(n + 1.0)
    rows = (np.arange(len(ms))[:, None] * (n_max + 1) + n[None, :]).ravel()
    data = (c[:, None] * rung[None, :]).ravel()
    d = ops.dim(ms, n_max)
    lower = sp.csr_matrix((data, (rows, rows + 1)), shape=(d, d))
    return (lower + lower.conj().T).tocsr()


def _tail_bound(alpha, n_max):
    a = abs(alpha)
    if a == 0.0:
        return 0.0
    return math.exp((n_max + 1) * math.log(a) - 0.5 * math.lgamma(n_max + 2))


def coherent_state(alpha, n_max, tail_tol=1e-8):
    """Truncated normalized ladder coherent state sum_n alpha^n/sqrt(n!) |n>.

    The first dropped coefficient |alpha|^(n_max+1)/sqrt((n_max+1)!) must stay
    below tail_tol, otherwise the approximate eigenvalue property is off.
    """
    tail = _tail_bound(alpha, n_max)
    if tail >= tail_tol:
        raise ValueError(f"coherent tail {tail:.3e} >= {tail_tol:.1e}; "
                         f"raise n_max for |alpha| = {abs(alpha):.3g}")
    n = np.arange(n_max + 1)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, n_max + 1)))))
    v = np.asarray(alpha, dtype=complex) ** n * np.exp(-0.5 * log_fact)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class CoherentFieldSpec:
    """Superposition over modes of per-mode coherent ladder states.

    Phi are the mode amplitudes (sum |Phi|^2 = 1) and alpha the coherent
    eigenvalues, one entry per mode of ms.
    """

    ms: object
    n_max: int
    Phi: np.ndarray
    alpha: np.ndarray
    tail_tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "Phi", np.asarray(self.Phi, dtype=complex))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=complex))
        if self.Phi.shape != (len(self.ms),) or self.alpha.shape != (len(self.ms),):
            raise ValueError("Phi and alpha must have one entry per mode")
        nrm = np.sum(np.abs(self.Phi) ** 2)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"sum |Phi|^2 = {nrm!r}, expected 1")
        worst = max(_tail_bound(a, self.n_max) for a in self.alpha)
        if worst >= self.tail_tol:
            raise ValueError(f"coherent tail {worst:.3e} >= {self.tail_tol:.1e}")

    def build_state(self):
        """Explicit state vector sum_k Phi_k |mode k> (x) |alpha_k>_coh."""
        psi = np.zeros(ops.dim(self.ms, self.n_max), dtype=complex)
        step = self.n_max + 1
        for k in range(len(self.ms)):
            psi[k * step:(k + 1) * step] = self.Phi[k] * coherent_state(
                self.alpha[k], self.n_max, self.tail_tol)
        return psi


def coherent_field_average(spec, which, p):
    """Closed-form <field(p)> as a 3-vector: sum_k |Phi_k|^2 (c_k alpha_k + c.c.)."""
    c = _ann_coefficients(spec.ms, which, p)
    mean_a = (np.abs(spec.Phi) ** 2 * spec.alpha)[:, None]
    return np.sum(c * mean_a + np.conj(c * mean_a), axis=0)


def coherent_energy(spec):
    """<H> = sum_k hbar omega_k |Phi_k|^2 (|alpha_k|^2 + 1/2)."""
    ms = spec.ms
    return float(np.sum(ms.hbar * ms.omega * np.abs(spec.Phi) ** 2
                        * (np.abs(spec.alpha) ** 2 + 0.5)))


def _eb_at(ms, n_max, p):
    e_ops = [field_operator(ms, n_max, "E", j, p) for j in range(3)]
    b_ops = [field_operator(ms, n_max, "B", j, p) for j in range(3)]
    return e_ops, b_ops


def _cross(left, right, component):
    d, e = {0: (1, 2), 1: (2, 0), 2: (0, 1)}[component]
    return left[d] @ right[e] - left[e] @ right[d]


def energy_momentum_identity_check(ms, n_max, sample_points, tol=1e-11):
    """Four operator identities tying E and B to H and P.

    (i) E.E + B.B is the same matrix at every sampled point; (ii) its V/2
    multiple equals H on the n < n_max subspace; (iii) V (E x B) = P there;
    (iv) E x B = -B x E.
    """
    if len(sample_points) < 3:
        raise ValueError("need at least 3 sample points")
    rep = Report(f"energy-momentum identities, {len(ms)} modes, n_max={n_max}")
    mask = ops.valid_mask(ms, n_max)

    densities = []
    for p in sample_points:
        e_ops, b_ops = _eb_at(ms, n_max, p)
        densities.append(sum(o @ o for o in e_ops + b_ops))
    dev = max(ops.max_abs(d - densities[0]) for d in densities[1:])
    rep.add("E.E + B.B independent of (t, x)", dev, tol)

    h = ops.hamiltonian(ms, n_max)
    dev = ops.max_abs(ops.restrict(0.5 * ms.volume * densities[0] - h, mask))
    rep.add("V/2 (E.E + B.B) = H", dev, tol)

    e_ops, b_ops = _eb_at(ms, n_max, sample_points[0])
    mom = ops.momentum(ms, n_max)
    dev = max(
        ops.max_abs(ops.restrict(ms.volume * _cross(e_ops, b_ops, j) - mom[j], mask))
        for j in range(3))
    rep.add("V (E x B) = P", dev, tol)

    dev = max(
        ops.max_abs(_cross(e_ops, b_ops, j) + _cross(b_ops, e_ops, j))
        for j in range(3))
    rep.add("E x B = -(B x E)", dev, tol)
    return rep


@dataclass(frozen=True)
class EBCommutator:
    commutator: object
    closed_form: object
    deviation: float


def eb_commutator(ms, n_max, alpha_idx, beta_idx):
    """[E_alpha, B_beta] by matrix arithmetic vs its closed form.

    Closed form: sum over modes of i hbar omega (s/2) (delta_ab - n_a n_b) / V
    times the mode projector, valid on the n < n_max subspace.  The result is
    position-independent, so both operators are evaluated at t = 0, x = 0.
    """
    ia, ib = _component_index(alpha_idx), _component_index(beta_idx)
    p0 = FieldPoint()
    e_op = field_operator(ms, n_max, "E", ia, p0)
    b_op = field_operator(ms, n_max, "B", ib, p0)
    comm = (e_op @ b_op - b_op @ e_op).tocsr()

    n_hat = ms.unit_kappa()
    delta = 1.0 if ia == ib else 0.0
    coef = (1j * ms.hbar * ms.omega * ms.s / (2.0 * ms.volume)
            * (delta - n_hat[:, ia] * n_hat[:, ib]))
    closed = sp.kron(sp.diags(coef.astype(complex)),
                     sp.identity(n_max + 1, dtype=complex), format="csr")

    mask = ops.valid_mask(ms, n_max)
    dev = ops.max_abs(ops.restrict(comm - closed, mask))
    return EBCommutator(comm, closed, dev)
