"""Run configuration: flat key = value files with [section] headers.

Sections only organize the file; keys are flattened into one namespace, so a
key must not be spelled twice.  Values are parsed lazily by the typed
accessors, which raise ConfigError naming the offending field.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

__all__ = ["ConfigError", "RunConfig", "EXPERIMENTS", "REQUIRED_KEYS",
           "load_config"]


class ConfigError(ValueError):
    """A run configuration is unusable; the message names the field."""


EXPERIMENTS = ("algebra-check", "fields-check", "emission", "two-photon",
               "blackbody")

# keys that must be present before the named experiment starts
REQUIRED_KEYS = {
    "algebra-check": ("L", "max_index", "N_max", "M"),
    "fields-check": ("L", "max_index", "N_max"),
    "emission": ("L", "max_index", "N_max", "omega0", "T"),
    "two-photon": ("L", "max_index", "T", "p_list"),
    "blackbody": ("beta", "mu_list"),
}


@dataclass(frozen=True)
class RunConfig:
    """Flattened key = value map plus the resolved experiment and seed."""

    experiment: str
    seed: int
    raw: dict

    def _fetch(self, key, default, required):
        if key in self.raw:
            return self.raw[key]
        if required:
            raise ConfigError(f"missing required field '{key}' for "
                              f"experiment '{self.experiment}'")
        return default

    def get_str(self, key, default=None, required=False):
        val = self._fetch(key, default, required)
        return val if val is None else str(val).strip()

    def get_int(self, key, default=None, required=False):
        val = self._fetch(key, default, required)
        if val is None or isinstance(val, int):
            return val
        try:
            return int(str(val).strip())
        except ValueError:
            raise ConfigError(
                f"field '{key}' must be an integer, got {val!r}") from None

    def get_float(self, key, default=None, required=False):
        val = self._fetch(key, default, required)
        if val is None or isinstance(val, float):
            return val
        try:
            return float(str(val).strip())
        except ValueError:
            raise ConfigError(
                f"field '{key}' must be a number, got {val!r}") from None

    def get_float_list(self, key, default=None, required=False):
        val = self._fetch(key, default, required)
        if val is None or isinstance(val, list):
            return val
        items = [s for s in str(val).replace(",", " ").split() if s]
        try:
            return [float(s) for s in items]
        except ValueError:
            raise ConfigError(f"field '{key}' must be a list of numbers, "
                              f"got {val!r}") from None

    def get_complex(self, key, default=None, required=False):
        val = self._fetch(key, default, required)
        if val is None or isinstance(val, complex):
            return val
        try:
            return complex(str(val).strip().replace(" ", ""))
        except ValueError:
            raise ConfigError(
                f"field '{key}' must be a complex number, got {val!r}") from None


def _flatten(parser):
    raw = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key in raw:
                raise ConfigError(f"field '{key}' given more than once")
            raw[key] = value
    return raw


def load_config(path, seed_override=None):
    """Parse a config file and resolve experiment, seed and required keys."""
    text = Path(path).read_text()
    stripped = [ln.strip() for ln in text.splitlines()]
    body = [ln for ln in stripped if ln and not ln.startswith(("#", ";"))]
    if body and not body[0].startswith("["):
        text = "[run]\n" + text  # headerless files get an implicit section

    parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str  # keys are case sensitive (N_max, T, L)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    raw = _flatten(parser)

    experiment = raw.get("experiment")
    if experiment is None:
        raise ConfigError("missing required field 'experiment'")
    experiment = experiment.strip()
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment '{experiment}'; "
                          f"expected one of {', '.join(EXPERIMENTS)}")

    if seed_override is not None:
        seed = seed_override
    else:
        try:
            seed = int(raw.get("seed", "0"))
        except ValueError:
            raise ConfigError(
                f"field 'seed' must be an integer, got {raw['seed']!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("field 'seed' must fit in an unsigned 64-bit integer")

    rc = RunConfig(experiment, seed, raw)
    for key in REQUIRED_KEYS[experiment]:
        rc.get_str(key, required=True)
    return rc
