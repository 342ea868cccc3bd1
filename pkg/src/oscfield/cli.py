"""Batch front end: run one experiment from a config file, emit report + CSV.

Exit status: 0 when every check row passes, 1 when any fails, 2 for
configuration or validation errors.  Given the same config and seed the
outputs are bit identical.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import blackbody as bb
from . import config as cfg
from . import multi
from . import operators as ops
from . import perturbation as pert
from .fields import (CoherentFieldSpec, FieldPoint, coherent_energy,
                     coherent_field_average, eb_commutator,
                     energy_momentum_identity_check, field_operator)
from .modes import ModeSet, make_cubic_modeset
from .reports import Report

__all__ = ["main", "list_experiments"]

_DESCRIPTIONS = (
    ("algebra-check",
     "projector-weighted ladder algebra and the sector resolution of identity"),
    ("fields-check",
     "field operators: flat energy density, H and P reconstruction, coherent averages"),
    ("emission",
     "first-order decay of a two-level dipole into a mode shell vs the flat-vacuum rate"),
    ("two-photon",
     "second-order two-quanta amplitudes against the canonical oracle, probability factors"),
    ("blackbody",
     "two-index thermal statistics: modified spectral density against the Planck limit"),
)


def list_experiments():
    """Stable one-line listing of the runnable experiments."""
    width = max(len(name) for name, _ in _DESCRIPTIONS)
    return "".join(f"{name:<{width}}  {desc}\n" for name, desc in _DESCRIPTIONS)


def _modeset(rc):
    box = rc.get_float("L", required=True)
    max_index = rc.get_int("max_index", required=True)
    volume = rc.get_float("V")
    ms = make_cubic_modeset(box, max_index, volume=volume)
    keep = rc.get_int("max_modes")
    if keep is not None:
        if not 1 <= keep <= len(ms):
            raise cfg.ConfigError(
                f"field 'max_modes' must lie in 1..{len(ms)}")
        ms = ModeSet(ms.s[:keep], ms.kappa[:keep], ms.volume,
                     c_light=ms.c_light, hbar=ms.hbar, k_B=ms.k_B)
    return ms


def _weights(rc, M):
    choice = rc.get_str("weights", "balanced")
    if choice == "balanced":
        return multi.ExtensionWeights.balanced(M)
    if choice == "ones":
        return multi.ExtensionWeights.constant(M, 1.0)
    vals = rc.get_float_list("weights")
    if len(vals) != M:
        raise cfg.ConfigError(f"field 'weights' must be 'balanced', 'ones' "
                              f"or {M} numbers")
    return multi.ExtensionWeights(dict(zip(range(1, M + 1), vals)))


def _vacuum(rc, ms):
    p = rc.get_float_list("p_list", required=True)
    phi = np.full(len(ms), 1.0 / np.sqrt(len(ms)), dtype=complex)
    return multi.VacuumSpec(phi, p)


def _run_algebra_check(rc):
    ms = _modeset(rc)
    n_max = rc.get_int("N_max", required=True)
    M = rc.get_int("M", required=True)
    tol = rc.get_float("tol", 1e-12)
    w = _weights(rc, M)

    report = Report(f"algebra-check: {len(ms)} modes, N_max={n_max}, M={M}")
    report.extend(ops.algebra_report(ms, n_max, tol=tol))
    report.extend(multi.bold_algebra_report(ms, n_max, w, M, tol=tol))
    return report, ("check", "deviation", "tol", "passed"), report.csv_rows()


def _run_fields_check(rc):
    ms = _modeset(rc)
    n_max = rc.get_int("N_max", required=True)
    tol = rc.get_float("tol", 1e-11)
    coh_tol = rc.get_float("coherent_tol", 1e-9)
    alpha_scale = rc.get_float("alpha_scale", 0.5)

    rng = np.random.default_rng(rc.seed)
    box = ms.volume ** (1.0 / 3.0)
    points = [FieldPoint(rng.uniform(-3.0, 3.0),
                         tuple(rng.uniform(-box / 2, box / 2, size=3)))
              for _ in range(3)]

    report = Report(f"fields-check: {len(ms)} modes, N_max={n_max}")
    report.extend(energy_momentum_identity_check(ms, n_max, points, tol=tol))
    axes = "xyz"
    for a_idx, b_idx in ((0, 1), (1, 2), (2, 0)):
        report.add(f"[E_{axes[a_idx]}, B_{axes[b_idx]}] matches closed form",
                   eb_commutator(ms, n_max, a_idx, b_idx).deviation, tol)

    # coherent averages against explicit state vectors
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(ms))
    alpha = alpha_scale * np.exp(1j * phases)
    spec = CoherentFieldSpec(ms, n_max,
                             np.full(len(ms), 1.0 / np.sqrt(len(ms))), alpha)
    psi = spec.build_state()
    p0 = points[0]
    for which in ("A", "E", "B"):
        closed = coherent_field_average(spec, which, p0)
        matrix = np.array([np.vdot(psi, field_operator(ms, n_max, which, j, p0)
                                   @ psi) for j in range(3)])
        report.add(f"<{which}> closed form matches explicit state",
                   float(np.max(np.abs(matrix - closed))), coh_tol)
    h_matrix = np.vdot(psi, ops.hamiltonian(ms, n_max) @ psi).real
    report.add("<H> = sum hbar omega |Phi|^2 (|alpha|^2 + 1/2)",
               abs(h_matrix - coherent_energy(spec)), coh_tol)
    return report, ("check", "deviation", "tol", "passed"), report.csv_rows()


def _gaussian_profile(rc, omega0):
    base = rc.get_float("F_base", 0.5)
    amp = rc.get_float("F_amp", 0.4)
    sigma = rc.get_float("F_sigma", 0.25)
    if sigma <= 0:
        raise cfg.ConfigError("field 'F_sigma' must be positive")

    def F(omega):
        return base + amp * np.exp(-0.5 * ((omega - omega0) / sigma) ** 2)
    return F


def _run_emission(rc):
    ms = _modeset(rc)
    n_max = rc.get_int("N_max", required=True)
    omega0 = rc.get_float("omega0", required=True)
    T = rc.get_float("T", required=True)
    dip = rc.get_float("d", 1e-3)
    u = np.asarray(rc.get_float_list("u", [1.0, 0.0, 0.0]), dtype=complex)
    u = u / np.linalg.norm(u)
    ratio_tol = rc.get_float("ratio_tol", 0.02)
    golden_tol = rc.get_float("golden_tol", 0.05)

    atom = pert.TwoLevelAtom(omega0, dip, u)
    F = _gaussian_profile(rc, omega0)
    rate = pert.emission_rate(atom, F, ms, T)

    report = Report(f"emission: {len(ms)} modes, omega0={omega0:g}, T={T:g}")
    report.note(f"P = {rate.rate:.6e}, P_old = {rate.rate_old:.6e}, "
                f"ratio = {rate.ratio:.6f}, F(omega0) = {F(omega0):.6f}")
    report.add("rate ratio estimates the vacuum profile at omega0",
               abs(rate.ratio / F(omega0) - 1.0), ratio_tol)

    # golden-rule consistency: channel probabilities vs P * T
    weights = np.sqrt(F(ms.omega))
    psi = np.zeros(ops.dim(ms, n_max), dtype=complex)
    psi[::n_max + 1] = weights / np.linalg.norm(weights)
    state = pert.first_order_state(atom, ms, n_max, psi, T)
    emitted = float(np.sum(np.abs(state[1::2]) ** 2))
    scaled = pert.emission_rate(
        atom, lambda w_: F(w_) / float(np.sum(F(ms.omega))), ms, T)
    report.add("sum of channel probabilities matches rate x T",
               abs(emitted / (scaled.rate * T) - 1.0), golden_tol)

    p_list = rc.get_float_list("p_list", [1.0])
    v = multi.VacuumSpec(np.full(len(ms), 1.0 / np.sqrt(len(ms))), p_list)
    w = _weights(rc, v.M)
    factor = pert.rate_factor(v, w)
    general = float(sum(k * w[k] ** 2 * v.p[k - 1] for k in range(1, v.M + 1)))
    report.note(f"sector rate factor = {factor!r}")
    report.add("rate factor matches sum_k k c_k^2 p_k",
               abs(factor - general), 1e-12)
    return report, ("check", "deviation", "tol", "passed"), report.csv_rows()


def _run_two_photon(rc):
    ms = _modeset(rc)
    T = rc.get_float("T", required=True)
    eta = rc.get_float("eta", 1e-6)
    levels = rc.get_int("atom_levels", 3)
    amp_tol = rc.get_float("amp_tol", 1e-10)

    atom = pert.synthetic_atom(levels=levels, seed=rc.seed)
    v = _vacuum(rc, ms)
    M = max(v.M, 2)
    w = _weights(rc, M)
    targets = rc.get_float_list("targets", [0.0, 1.0])
    t1, t2 = (int(targets[0]), int(targets[1]))

    report = Report(f"two-photon: {len(ms)} modes, sectors 1..{v.M}, T={T:g}")
    result = pert.second_order_two_quanta(atom, v, ms, w, M, (t1, t2), T,
                                          eta=eta)
    oracle = pert.standard_oracle_two_photon(atom, ms, (t1, t2), T, eta=eta)
    p2 = v.p[1] if v.M >= 2 else 0.0
    expected = complex(w[2] ** 2 * np.sqrt(p2) * v.phi[t1] * v.phi[t2] * oracle)
    report.note(f"machinery amplitude = {result.value!r}")
    report.note(f"c2^2 sqrt(p2) phi1 phi2 x oracle = {expected!r}")
    report.add("machinery = c2^2 sqrt(p2) phi1 phi2 x canonical oracle",
               abs(result.value - expected), amp_tol)

    swapped = pert.second_order_two_quanta(atom, v, ms, w, M, (t2, t1), T,
                                           eta=eta)
    report.add("amplitude symmetric under swapping the targets",
               abs(result.value - swapped.value), 1e-12)

    if v.M >= 3 and v.p[1] > 0 and v.p[2] > 0:
        report.extend(pert.three_oscillator_identity_check(
            atom, v, ms, w, (t1, t2), T, eta=eta, tol=amp_tol))

    factor = pert.two_photon_factor(v, w)
    report.note(f"probability factor for this vacuum = {factor!r}")
    phi1 = np.zeros(len(ms), dtype=complex)
    phi1[:2] = 1.0 / np.sqrt(2.0)
    only1 = multi.VacuumSpec(phi1, [1.0])
    only2 = multi.VacuumSpec(phi1, [0.0, 1.0])
    w2 = multi.ExtensionWeights.balanced(2)
    report.add("factor(p_1 = 1) = 0 exactly",
               abs(pert.two_photon_factor(only1,
                                          multi.ExtensionWeights.balanced(1))),
               0.0)
    report.add("factor(p_2 = 1) = 1/2 exactly",
               abs(pert.two_photon_factor(only2, w2) - 0.5), 0.0)
    return report, ("check", "deviation", "tol", "passed"), report.csv_rows()


def _run_blackbody(rc):
    beta = rc.get_float("beta", required=True)
    mu_over_kt = rc.get_float_list("mu_list", required=True)
    if any(m > 0 for m in mu_over_kt):
        raise cfg.ConfigError("field 'mu_list' entries must be <= 0 "
                              "(units of k_B T)")
    n_grid = rc.get_int("n_grid", 200)
    lo = rc.get_float("grid_lo", 0.01)
    hi = rc.get_float("grid_hi", 10.0)
    rel_tol = rc.get_float("rel_tol", 1e-12)

    grid = bb.default_grid(beta, n=n_grid, lo=lo, hi=hi)
    mu_list = [m / beta for m in mu_over_kt]
    limit = bb.planck_limit_report(beta, mu_list, grid, rel_tol=rel_tol)

    report = Report(f"blackbody: beta={beta:g}, "
                    f"mu/k_BT in ({', '.join(f'{m:g}' for m in mu_over_kt)})")
    report.extend(limit.checks)

    # factored q_m evaluation against the direct series
    probe = bb.ThermalParams(beta, min(mu_list) if min(mu_list) < 0
                             else -1.0 / beta)
    qdev = max(abs(bb.mean_excitations(probe, w_, rel_tol)
                   - bb.mean_excitations_qform(probe, w_, rel_tol))
               for w_ in grid[:: max(1, n_grid // 8)])
    report.add("q_m-factored series matches direct evaluation", qdev, 1e-12)

    peak = bb.planck_peak(beta)
    root = brentq(lambda x: x - 3.0 * (1.0 - np.exp(-x)), 2.0, 4.0,
                  xtol=1e-12)
    report.note(f"Planck peak from density: beta hbar omega = {peak:.6f}; "
                f"root of x = 3(1 - e^-x): {root:.6f}")
    report.add("Planck peak location matches the transcendental root",
               abs(peak - root), 1e-4)

    if any(m == 0.0 for m in mu_list):
        tp0 = bb.ThermalParams(beta, 0.0)
        mod_peak = bb.modified_peak(tp0, rel_tol)
        peak_val = bb.planck_density(beta, peak / beta)
        mod_val = bb.spectral_density_new(tp0, mod_peak / beta, rel_tol)
        report.add("mu = 0 peak value below the Planck peak",
                   peak_val - mod_val, 0.0, at_least=True)
        report.add("mu = 0 peak at larger beta hbar omega",
                   mod_peak - peak, 0.0, at_least=True)

    header = ("mu", "omega_over_kT", "rho_new", "rho_planck", "rel_dev")
    rows = []
    for curve in limit.curves:
        ref = limit.planck.value
        for i, w_ in enumerate(grid):
            rows.append((curve.mu, beta * w_, curve.value[i], ref[i],
                         abs(curve.value[i] - ref[i]) / ref[i]))
    return report, header, rows


_RUNNERS = {
    "algebra-check": _run_algebra_check,
    "fields-check": _run_fields_check,
    "emission": _run_emission,
    "two-photon": _run_two_photon,
    "blackbody": _run_blackbody,
}


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))  # shortest round-trip decimal
    return str(value)


def _write_outputs(out_dir, experiment, report, header, rows):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(report.to_text())
    with open(out_dir / f"{experiment}.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(c) for c in row])


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="oscfield",
        description="oscillator-field experiments: checks, rates, spectra")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one experiment from a config file")
    run_p.add_argument("config", help="path to a key = value config file")
    run_p.add_argument("--out", default=".", help="output directory")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (unsigned 64-bit)")
    sub.add_parser("list", help="list the available experiments")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_experiments())
        return 0

    try:
        rc = cfg.load_config(args.config, seed_override=args.seed)
        report, header, rows = _RUNNERS[rc.experiment](rc)
    except (cfg.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        _write_outputs(Path(args.out), rc.experiment, report, header, rows)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 2

    sys.stdout.write(report.to_text())
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
