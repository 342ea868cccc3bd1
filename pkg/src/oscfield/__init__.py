"""Field quantization on a single oscillator with indefinite frequency.

One harmonic oscillator carries a frequency operator whose eigenvalues are
the mode frequencies of a cavity; ladder operators per mode then satisfy a
projector-weighted commutation algebra instead of the canonical one.  The
package builds these operators on truncated number ladders, assembles the
electromagnetic field observables and their coherent states, extends
everything to symmetric k-oscillator sectors, works out first- and
second-order emission amplitudes against the canonical results, and sums the
modified thermal spectrum that replaces the Planck law when the oscillator
number is itself thermal.
"""

from .modes import Mode, ModeSet, helicity_vectors, make_cubic_modeset
from .reports import CheckRow, Report

__all__ = [
    "Mode", "ModeSet", "helicity_vectors", "make_cubic_modeset",
    "CheckRow", "Report",
]

__version__ = "0.1.0"
