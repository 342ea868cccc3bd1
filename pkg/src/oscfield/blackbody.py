"""Thermal radiation when the oscillator number is itself statistical.

States are labeled by (m oscillators, n excitations) with energy
E_{m,n} = m hbar omega (n + 1/2), weighted by Boltzmann-Gibbs factors with a
chemical potential mu conjugate to m.  The n-sum of every m-term is geometric
and is evaluated in closed form; the remaining m-series is truncated
adaptively.  The mean excitation number replaces the Bose factor in the
spectral density, and the ordinary Planck law is recovered as mu -> -infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .reports import Report

__all__ = [
    "ThermalParams", "SpectralCurve", "PlanckLimitReport", "boltzmann_energy",
    "partition_function", "mean_excitations", "mean_excitations_qform",
    "truncation_order", "spectral_density_new", "planck_density",
    "default_grid", "planck_peak", "modified_peak", "planck_limit_report",
    "visibility_crossing",
]

_HARD_CAP = 10 ** 6
_CHUNK = 256


@dataclass(frozen=True)
class ThermalParams:
    """Inverse temperature and the chemical potential of oscillator number."""

    beta: float
    mu: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.mu > 0:
            raise ValueError("mu must be <= 0")

    @classmethod
    def unchecked(cls, beta, mu):
        """Bypass the mu <= 0 gate, e.g. to probe the divergence boundary."""
        tp = object.__new__(cls)
        object.__setattr__(tp, "beta", float(beta))
        object.__setattr__(tp, "mu", float(mu))
        return tp


def boltzmann_energy(m, n, omega, hbar=1.0):
    """E_{m,n} = m hbar omega (n + 1/2).

    Grouped as m * (hbar * (omega * (n + 0.5))), the same float product chain
    the sector Hamiltonian diagonal goes through, so cross-module energy
    comparisons can be exact rather than toleranced.
    """
    return m * (hbar * (omega * (n + 0.5)))


def _check_domain(tp, omega, rel_tol, hbar):
    if not 0 < rel_tol <= 1e-6:
        raise ValueError("rel_tol must lie in (0, 1e-6]")
    if not omega > 0:
        raise ValueError("omega must be positive")
    if 0.5 * hbar * omega - tp.mu <= 0:
        raise ValueError(
            f"partition series diverges: need hbar*omega/2 - mu > 0, "
            f"got mu = {tp.mu}, hbar*omega/2 = {0.5 * hbar * omega}")


def _adaptive_sum(term, rel_tol):
    """Sum term(m) for m = 1, 2, ... until a term drops below rel_tol times
    the running total; returns (value, last m included)."""
    total = 0.0
    for start in range(1, _HARD_CAP + 1, _CHUNK):
        m = np.arange(start, min(start + _CHUNK, _HARD_CAP + 1), dtype=float)
        t = term(m)
        run = total + np.cumsum(t)
        small = t < rel_tol * run
        if np.any(small):
            stop = int(np.argmax(small))
            return float(run[stop]), int(m[stop])
        total = float(run[-1])
    raise RuntimeError(f"m-series failed to converge within {_HARD_CAP} terms")


def _series_terms(tp, omega, hbar):
    """Closed-form m-terms of the partition sum and the excitation numerator.

    The printed prefactor e^{beta m (mu + hbar omega/2)} is combined with the
    leading e^{-beta m hbar omega} of the geometric factor before
    exponentiating; keeping them separate overflows for large beta omega even
    though every term is tiny.
    """
    bw = tp.beta * hbar * omega
    pre = tp.beta * (tp.mu - 0.5 * hbar * omega)

    def z_term(m):
        x = np.exp(-bw * m)
        return np.exp(pre * m) / (1.0 - x)

    def n_term(m):
        # inner sum_n n x^n = x/(1-x)^2
        x = np.exp(-bw * m)
        return m * np.exp(pre * m) * x / (1.0 - x) ** 2

    return z_term, n_term


def partition_function(tp, omega, rel_tol=1e-12, hbar=1.0):
    """Z = sum_m e^{beta m (mu + hbar omega/2)} x_m / (1 - x_m), x_m = e^{-beta m hbar omega}."""
    _check_domain(tp, omega, rel_tol, hbar)
    z_term, _ = _series_terms(tp, omega, hbar)
    value, _ = _adaptive_sum(z_term, rel_tol)
    return value


def mean_excitations(tp, omega, rel_tol=1e-12, hbar=1.0):
    """Average of m*n over the two-index Boltzmann weights.

    Z^{-1} sum_m sum_n m n e^{-beta[m hbar omega (n + 1/2) - m mu]} with the
    n-sum in closed form.
    """
    _check_domain(tp, omega, rel_tol, hbar)
    z_term, n_term = _series_terms(tp, omega, hbar)
    num, _ = _adaptive_sum(n_term, rel_tol)
    den, _ = _adaptive_sum(z_term, rel_tol)
    return num / den


def mean_excitations_qform(tp, omega, rel_tol=1e-12, hbar=1.0):
    """Same ratio with e^{-beta |mu|} factored out of both series.

    The surviving weights q_m = e^{-beta |mu| (m - 1)} start at q_1 = 1; the
    result must agree with mean_excitations to near machine precision, which
    the tests pin as a regression on the factoring argument.
    """
    _check_domain(tp, omega, rel_tol, hbar)
    bw = tp.beta * hbar * omega
    t = tp.beta * abs(tp.mu)

    def zq(m):
        x = np.exp(-bw * m)
        return np.exp(-t * (m - 1.0)) * np.exp(-0.5 * bw * m) / (1.0 - x)

    def nq(m):
        x = np.exp(-bw * m)
        return m * np.exp(-t * (m - 1.0)) * np.exp(-0.5 * bw * m) \
            * x / (1.0 - x) ** 2

    num, _ = _adaptive_sum(nq, rel_tol)
    den, _ = _adaptive_sum(zq, rel_tol)
    return num / den


def truncation_order(tp, omega, rel_tol=1e-12, hbar=1.0):
    """Deepest m reached by the two series behind mean_excitations."""
    _check_domain(tp, omega, rel_tol, hbar)
    z_term, n_term = _series_terms(tp, omega, hbar)
    _, oz = _adaptive_sum(z_term, rel_tol)
    _, on = _adaptive_sum(n_term, rel_tol)
    return max(oz, on)


def spectral_density_new(tp, omega, rel_tol=1e-12, hbar=1.0, c_light=1.0):
    """rho(omega) = (hbar / pi^2 c^3) omega^3 nbar_omega."""
    nbar = mean_excitations(tp, omega, rel_tol, hbar)
    return hbar / (math.pi ** 2 * c_light ** 3) * omega ** 3 * nbar


def planck_density(beta, omega, hbar=1.0, c_light=1.0):
    """rho(omega) = (hbar / pi^2 c^3) omega^3 / (e^{beta hbar omega} - 1)."""
    return hbar / (math.pi ** 2 * c_light ** 3) * omega ** 3 \
        / (math.expm1(beta * hbar * omega))


def default_grid(beta, n=200, lo=0.01, hi=10.0, hbar=1.0):
    """200 log-spaced frequencies covering lo <= beta hbar omega <= hi."""
    return np.geomspace(lo, hi, n) / (beta * hbar)


@dataclass(frozen=True)
class SpectralCurve:
    """One spectral density sampled on a frequency grid, with provenance."""

    label: str
    omega: np.ndarray
    value: np.ndarray
    beta: float
    mu: float | None
    rel_tol: float
    max_order: int

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        value = np.asarray(self.value, dtype=float)
        if omega.shape != value.shape:
            raise ValueError("grid and values differ in length")
        if not np.all(np.isfinite(value)) or np.any(value < 0):
            raise ValueError("spectral values must be finite and >= 0")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "value", value)


def _sample_curve(tp, grid, rel_tol, hbar, c_light):
    vals = np.array([spectral_density_new(tp, w, rel_tol, hbar, c_light)
                     for w in grid])
    order = max(truncation_order(tp, w, rel_tol, hbar) for w in grid)
    return SpectralCurve(f"mu = {tp.mu:g}", grid, vals, tp.beta, tp.mu,
                         rel_tol, order)


@dataclass(frozen=True)
class PlanckLimitReport:
    """Curves, per-mu deviations from Planck, and the pass/fail rows."""

    curves: list
    planck: SpectralCurve
    deviations: list
    checks: Report
    visibility: float


def planck_limit_report(beta, mu_list=None, grid=None, rel_tol=1e-12,
                        hbar=1.0, c_light=1.0, visibility=0.01):
    """Sweep the density over a mu list and compare against Planck.

    mu defaults to (0, -0.8, -3, -10) k_B T; the grid defaults to 200
    log-spaced points over 0.01 <= beta hbar omega <= 10.  Deviations are
    maximum relative pointwise differences and must not grow as mu decreases.
    The 1% bound on the most negative mu is a build choice standing in for
    the qualitative claim that the curve becomes indistinguishable.
    """
    if mu_list is None:
        mu_list = [0.0, -0.8 / beta, -3.0 / beta, -10.0 / beta]
    mu_list = [float(mu) for mu in mu_list]
    if sorted(mu_list, reverse=True) != mu_list:
        raise ValueError("mu_list must be strictly decreasing")
    if grid is None:
        grid = default_grid(beta, hbar=hbar)
    grid = np.asarray(grid, dtype=float)

    ref_vals = np.array([planck_density(beta, w, hbar, c_light) for w in grid])
    planck = SpectralCurve("planck", grid, ref_vals, beta, None, rel_tol, 1)

    curves = []
    deviations = []
    for mu in mu_list:
        tp = ThermalParams(beta, mu)
        curve = _sample_curve(tp, grid, rel_tol, hbar, c_light)
        curves.append(curve)
        deviations.append((mu, float(np.max(np.abs(curve.value - ref_vals)
                                            / ref_vals))))

    checks = Report("modified spectral density against the Planck limit")
    devs = [d for _, d in deviations]
    checks.add(f"deviation at mu = {mu_list[-1]:g} below 1% (build choice)",
               devs[-1], 0.01)
    worst_rise = max((devs[i + 1] - devs[i] for i in range(len(devs) - 1)),
                     default=0.0)
    checks.add("deviation nonincreasing as mu decreases",
               max(0.0, worst_rise), 0.0)
    recomputed = np.array([planck_density(beta, w, hbar, c_light)
                           for w in grid])
    checks.add("Planck reference reproducible on the grid",
               float(np.max(np.abs(recomputed - ref_vals))), 0.0)

    for mu, dev in deviations:
        vis = "visible" if dev > visibility else "below threshold"
        checks.note(f"mu = {mu:g}: max relative deviation {dev:.3e} ({vis} "
                    f"at the {visibility:.0%} level)")
    checks.note(f"deepest m-series truncation: "
                f"{max(c.max_order for c in curves)} terms")
    return PlanckLimitReport(curves, planck, deviations, checks, visibility)


def _peak_location(density, beta, hbar, bounds):
    res = minimize_scalar(lambda x: -density(x / (beta * hbar)),
                          bounds=bounds, method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def planck_peak(beta, hbar=1.0, c_light=1.0, bounds=(1.0, 8.0)):
    """beta hbar omega at the Planck density maximum, via the density itself."""
    return _peak_location(lambda w: planck_density(beta, w, hbar, c_light),
                          beta, hbar, bounds)


def modified_peak(tp, rel_tol=1e-12, hbar=1.0, c_light=1.0, bounds=(1.0, 8.0)):
    """beta hbar omega at the modified density maximum."""
    return _peak_location(
        lambda w: spectral_density_new(tp, w, rel_tol, hbar, c_light),
        tp.beta, hbar, bounds)


def visibility_crossing(beta, threshold=0.01, grid=None, rel_tol=1e-10,
                        hbar=1.0, c_light=1.0, bracket=(0.5, 10.0)):
    """beta |mu| at which the maximum deviation from Planck equals threshold.

    The deviation decays monotonically as mu walks away from zero, so the
    crossing is a scalar root.  This quantifies the temperature band where
    the modification would be observable instead of hard-coding one.
    """
    from scipy.optimize import brentq

    if grid is None:
        grid = default_grid(beta, n=60, hbar=hbar)
    grid = np.asarray(grid, dtype=float)
    ref = np.array([planck_density(beta, w, hbar, c_light) for w in grid])

    def excess(t):
        tp = ThermalParams(beta, -t / beta)
        vals = np.array([spectral_density_new(tp, w, rel_tol, hbar, c_light)
                         for w in grid])
        return float(np.max(np.abs(vals - ref) / ref)) - threshold

    return float(brentq(excess, bracket[0], bracket[1], xtol=1e-3))
