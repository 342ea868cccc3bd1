"""Mode lattices and polarization geometry.

A mode is a helicity/wavevector pair (s, kappa) with frequency
omega = c|kappa|.  The ordered mode list fixes all basis indexing
downstream, so construction must be deterministic: the cubic lattice
is sorted by the integer key (|n|^2, n1, n2, n3, s) and never by
derived floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mode",
    "ModeSet",
    "helicity_vectors",
    "helicity_vectors_many",
    "check_polarization",
    "make_cubic_modeset",
]


@dataclass(frozen=True)
class Mode:
    """One (s, kappa) label with its derived frequency."""

    s: int
    kappa: tuple[float, float, float]
    omega: float

    def __post_init__(self):
        if self.s not in (1, -1):
            raise ValueError(f"helicity must be +1 or -1, got {self.s}")
        if not self.omega > 0.0:
            raise ValueError("zero-frequency modes rejected")


class ModeSet:
    """Ordered, immutable collection of distinct modes in a box of volume V.

    Stored as flat arrays (`s`, `kappa`, `omega`) so rate kernels can stay
    vectorized; `Mode` objects are materialized on demand.  Natural units
    hbar = c = k_B = 1 by default, overridable per set.
    """

    def __init__(self, s, kappa, volume, *, c_light=1.0, hbar=1.0, k_B=1.0):
        s = np.asarray(s, dtype=np.int8)
        kappa = np.asarray(kappa, dtype=float)
        if kappa.ndim != 2 or kappa.shape[1] != 3 or s.shape[0] != kappa.shape[0]:
            raise ValueError("need matching s (n,) and kappa (n, 3) arrays")
        if s.shape[0] == 0:
            raise ValueError("empty mode set")
        if not volume > 0:
            raise ValueError("volume must be positive")
        if not (np.all(s == 1) or np.all(s == -1)):
            if not np.isin(s, (1, -1)).all():
                raise ValueError("helicities must be +1 or -1")
        omega = c_light * np.linalg.norm(kappa, axis=1)
        if not (omega > 0.0).all():
            raise ValueError("zero-frequency modes rejected")
        keys = {(int(si), *map(float, ki)) for si, ki in zip(s, kappa)}
        if len(keys) != s.shape[0]:
            raise ValueError("duplicate (s, kappa) entries")
        self.s = s
        self.s.setflags(write=False)
        self.kappa = kappa
        self.kappa.setflags(write=False)
        self.omega = omega
        self.omega.setflags(write=False)
        self.volume = float(volume)
        self.c_light = float(c_light)
        self.hbar = float(hbar)
        self.k_B = float(k_B)
        self._index = {k: i for i, k in enumerate(
            (int(si), *map(float, ki)) for si, ki in zip(s, kappa))}

    @classmethod
    def from_modes(cls, modes, volume, **constants):
        s = [m.s for m in modes]
        kappa = [m.kappa for m in modes]
        return cls(s, kappa, volume, **constants)

    def __len__(self):
        return self.s.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self.mode(i)

    def mode(self, i):
        return Mode(int(self.s[i]), tuple(map(float, self.kappa[i])),
                    float(self.omega[i]))

    @property
    def modes(self):
        return list(self)

    def index_of(self, mode):
        return self.index_of_sk(mode.s, mode.kappa)

    def index_of_sk(self, s, kappa):
        key = (int(s), *map(float, kappa))
        try:
            return self._index[key]
        except KeyError:
            raise ValueError(f"mode (s={s}, kappa={tuple(kappa)}) not in set") from None

    def unit_kappa(self):
        return self.kappa / np.linalg.norm(self.kappa, axis=1)[:, None]

    def to_text(self):
        """Audit dump, one mode per line: s, kappa components, omega."""
        lines = [f"volume = {self.volume!r}",
                 f"c_light = {self.c_light!r}  hbar = {self.hbar!r}  k_B = {self.k_B!r}",
                 f"modes = {len(self)}"]
        for i in range(len(self)):
            kx, ky, kz = self.kappa[i]
            lines.append(
                f"s = {int(self.s[i]):+d}  kappa = ({kx!r}, {ky!r}, {kz!r})"
                f"  omega = {self.omega[i]!r}")
        return "\n".join(lines) + "\n"


def helicity_vectors_many(kappa):
    """Helicity polarization vectors for an (n, 3) array of wavevectors.

    Returns (e_plus, e_minus), each (n, 3) complex, built on the spherical
    frame e_s = (theta_hat + i*s*phi_hat)/sqrt(2).  On the z-axis the frame
    degenerates; the convention there is theta_hat = sign(kz)*x_hat,
    phi_hat = y_hat.  Guarantees, each to ~1e-15:

        kappa . e_s = 0,   e_s . e_s = 0,   e_s . e_s* = 1,
        n_hat x e_s = -i s e_s,   e_{-s} = conj(e_s).
    """
    kappa = np.atleast_2d(np.asarray(kappa, dtype=float))
    norm = np.linalg.norm(kappa, axis=1)
    if not (norm > 0.0).all():
        raise ValueError("zero wavevector rejected")
    rho = np.hypot(kappa[:, 0], kappa[:, 1])
    ct = kappa[:, 2] / norm
    st = rho / norm
    on_axis = rho <= 1e-300 * norm
    safe_rho = np.where(on_axis, 1.0, rho)
    cp = np.where(on_axis, 1.0, kappa[:, 0] / safe_rho)
    sp = np.where(on_axis, 0.0, kappa[:, 1] / safe_rho)
    theta_hat = np.stack([ct * cp, ct * sp, -st], axis=1)
    phi_hat = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    e_plus = (theta_hat + 1j * phi_hat) / np.sqrt(2.0)
    return e_plus, e_plus.conj()


def helicity_vectors(kappa):
    """(e_plus, e_minus) for a single wavevector; see helicity_vectors_many."""
    e_plus, e_minus = helicity_vectors_many(np.asarray(kappa, dtype=float))
    return e_plus[0], e_minus[0]


def check_polarization(kappa, e):
    """Max absolute deviation from the three polarization invariants."""
    kappa = np.asarray(kappa, dtype=float)
    e = np.asarray(e)
    return max(abs(np.dot(kappa, e)) / np.linalg.norm(kappa),
               abs(np.dot(e, e)),
               abs(np.dot(e, e.conj()) - 1.0))


def make_cubic_modeset(box_length, max_index, volume=None, **constants):
    """Periodic-box lattice kappa = (2*pi/L)(n1, n2, n3), both helicities.

    All integer index vectors in [-max_index, max_index]^3 except the zero
    vector, each with s = +1 and s = -1; volume defaults to L^3.
    """
    if not box_length > 0:
        raise ValueError("box_length must be positive")
    if max_index < 1:
        raise ValueError("max_index >= 1 required (empty spectrum otherwise)")
    r = np.arange(-max_index, max_index + 1)
    n = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    n = n[np.any(n != 0, axis=1)]
    n2 = np.sum(n * n, axis=1)
    # integer sort key, never derived floats: (|n|^2, n1, n2, n3)
    order = np.lexsort((n[:, 2], n[:, 1], n[:, 0], n2))
    n = n[order]
    kappa = np.repeat(n, 2, axis=0) * (2.0 * np.pi / box_length)
    s = np.tile([1, -1], n.shape[0])
    if volume is None:
        volume = box_length ** 3
    return ModeSet(s, kappa, volume, **constants)
