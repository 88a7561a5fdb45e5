"""System configuration, unit conversion, and distance-based path loss.

A scenario is a flat key-value text file (one `key = value` per line, `#`
comments). Raw values are SI; any power key may instead be given in dBm with
a `_dbm` suffix. All derived constants used by the rest of the toolkit come
from here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

LIGHT_SPEED = 3e8

# Keys understood by the parser. `alpha` and `p_ce` pin the channel-estimation
# slot for sweep experiments; the optimizer may override them when asked.
_INT_KEYS = ("M", "R", "K")
_FLOAT_KEYS = ("T", "w", "noise_power", "eta", "rho", "carrier_freq", "tau", "alpha", "p_ce")
_LIST_KEYS = ("delta", "distances", "zeta")
_POWER_KEYS = ("w", "noise_power", "rho", "p_ce")  # accept `_dbm` variants
_REQUIRED_CONFIG = ("M", "R", "K", "T", "w", "noise_power", "eta", "delta", "rho",
                    "distances", "carrier_freq")
_REQUIRED_DESIGN = ("alpha", "p_ce")


class ScenarioError(ValueError):
    """Raised for unparseable scenario files or invariant violations."""


def dbm_to_watts(x):
    """Convert a dBm level to watts: 10^((x-30)/10)."""
    x = float(x)
    if not math.isfinite(x):
        raise ScenarioError(f"dBm value must be finite, got {x}")
    return 10.0 ** ((x - 30.0) / 10.0)


def watts_to_dbm(x):
    return 10.0 * math.log10(float(x)) + 30.0


def effective_aperture(f):
    """Isotropic-antenna aperture (m^2) at carrier frequency f (Hz)."""
    if f <= 0:
        raise ScenarioError(f"carrier_freq must be positive, got {f}")
    return LIGHT_SPEED ** 2 / (4.0 * math.pi * f ** 2)


def path_loss(d, f):
    """Large-scale power gain at distance d (m) and frequency f (Hz).

    Returns (aperture, beta) with beta = aperture / (4 pi d^2).
    """
    if d <= 0:
        raise ScenarioError(f"distance must be positive, got {d}")
    a_e = effective_aperture(f)
    return a_e, a_e / (4.0 * math.pi * d ** 2)


@dataclass(frozen=True)
class TagLinkStats:
    """Per-tag large-scale fading and the shared antenna aperture."""

    beta: tuple
    aperture: float


@dataclass(frozen=True)
class SystemConfig:
    """All physical and protocol parameters of one deployment.

    Units: T in symbol periods, powers in watts, distances in meters,
    carrier_freq in hertz. tau is the channel-power truncation floor used by
    the closed forms; if omitted it defaults to 1e-2 * min_k(beta_k).
    """

    M: int
    R: int
    K: int
    T: float
    w: float
    noise_power: float
    eta: float
    delta: tuple
    rho: float
    distances: tuple
    carrier_freq: float
    tau: float = None

    def __post_init__(self):
        checks = [
            (self.M >= 1, "M must be >= 1"),
            (self.R >= 1, "R must be >= 1"),
            (self.K >= 1, "K must be >= 1"),
            (self.T > 0, "T must be positive"),
            (self.w >= 0, "w out of range (must be >= 0)"),
            (self.noise_power >= 0, "noise_power out of range (must be >= 0)"),
            (0 < self.eta <= 1, "eta out of range (must be in (0,1])"),
            (self.rho >= 0, "rho out of range (must be >= 0)"),
            (len(self.delta) == self.K, "delta length must equal K"),
            (len(self.distances) == self.K, "distances length must equal K"),
            (all(0 <= dk <= 1 for dk in self.delta), "delta out of range (each in [0,1])"),
            (all(dk > 0 for dk in self.distances), "distances must be positive"),
            (self.carrier_freq > 0, "carrier_freq must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ScenarioError(msg)
        if self.tau is None:
            beta = [path_loss(dk, self.carrier_freq)[1] for dk in self.distances]
            object.__setattr__(self, "tau", 1e-2 * min(beta))
        if self.tau <= 0:
            raise ScenarioError("tau out of range (must be > 0)")

    def link_stats(self):
        a_e = effective_aperture(self.carrier_freq)
        beta = tuple(a_e / (4.0 * math.pi * dk ** 2) for dk in self.distances)
        return TagLinkStats(beta=beta, aperture=a_e)

    def single_tag(self, k=0):
        """Reduce to a one-tag deployment keeping tag k's link parameters."""
        return replace(self, K=1, delta=(self.delta[k],), distances=(self.distances[k],))


def carrier_power(w, T, alpha, p_ce):
    """Carrier power during the transfer slot: p = (wT - alpha*p_ce)/(T - alpha)."""
    if not 0 <= alpha < T:
        raise ScenarioError(f"alpha must satisfy 0 <= alpha < T, got alpha={alpha}, T={T}")
    p = (w * T - alpha * p_ce) / (T - alpha)
    if p <= 0:
        raise ScenarioError(
            f"pilot energy alpha*p_ce={alpha * p_ce:g} exhausts the block budget w*T={w * T:g}")
    return p


def parse_scenario_text(text):
    """Parse scenario text into a raw key -> value dict (floats/tuples)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" in body:
            key, _, val = body.partition("=")
        else:
            parts = body.split(None, 1)
            if len(parts) != 2:
                raise ScenarioError(f"line {lineno}: expected 'key value', got {body!r}")
            key, val = parts
        key = key.strip()
        val = val.strip()
        base = key[:-4] if key.endswith("_dbm") else key
        try:
            if base in _INT_KEYS:
                parsed = int(val)
            elif base in _LIST_KEYS:
                parsed = tuple(float(v) for v in val.split(","))
            elif base in _FLOAT_KEYS:
                parsed = float(val)
            else:
                raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: cannot parse value for {key!r}: {exc}") from None
        if key.endswith("_dbm"):
            if base not in _POWER_KEYS:
                raise ScenarioError(f"line {lineno}: key {base!r} does not take a dBm form")
            parsed = dbm_to_watts(parsed)
            key = base
        if key in raw:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = parsed
    return raw


def _read_raw(path, overrides=None):
    with open(path, "r", encoding="utf-8") as fh:
        raw = parse_scenario_text(fh.read())
    if overrides:
        text = "\n".join(f"{k} = {v}" for k, v in overrides.items())
        raw.update(parse_scenario_text(text))
    return raw


def load_scenario(path, overrides=None):
    """Load and validate a SystemConfig from a scenario file."""
    raw = _read_raw(path, overrides)
    missing = [k for k in _REQUIRED_CONFIG if k not in raw]
    if missing:
        raise ScenarioError(f"scenario {path}: missing required key(s): {', '.join(missing)}")
    kwargs = {k: raw[k] for k in _REQUIRED_CONFIG}
    if "tau" in raw:
        kwargs["tau"] = raw["tau"]
    return SystemConfig(**kwargs)


def load_pinned_design(path, config, overrides=None):
    """Read the pinned CE slot (alpha, p_ce) and optional zeta from a scenario file.

    Returns (zeta, alpha, p_ce); zeta defaults to the uniform split.
    """
    raw = _read_raw(path, overrides)
    missing = [k for k in _REQUIRED_DESIGN if k not in raw]
    if missing:
        raise ScenarioError(f"scenario {path}: missing required key(s): {', '.join(missing)}")
    alpha = float(raw["alpha"])
    p_ce = float(raw["p_ce"])
    zeta = raw.get("zeta", tuple(1.0 / config.K for _ in range(config.K)))
    if len(zeta) != config.K:
        raise ScenarioError("zeta length must equal K")
    if abs(sum(zeta) - 1.0) > 1e-9 or any(z < 0 for z in zeta):
        raise ScenarioError("zeta must be a point on the probability simplex")
    if alpha != int(alpha) or int(alpha) % config.K != 0:
        raise ScenarioError(f"alpha={alpha:g} must be an integer multiple of K={config.K}")
    if int(alpha) // config.K < config.M:
        raise ScenarioError(
            f"alpha={alpha:g} gives pilot length {int(alpha) // config.K} < M={config.M}")
    carrier_power(config.w, config.T, alpha, p_ce)  # raises if the budget is void
    return np.asarray(zeta, dtype=float), alpha, p_ce


def scenario_text(config, alpha=None, p_ce=None, zeta=None):
    """Serialize a config (and optional pinned design) back to scenario format."""
    lines = ["# wpbc scenario (SI units; *_dbm variants accepted on input)"]
    for key in ("M", "R", "K"):
        lines.append(f"{key} = {getattr(config, key)}")
    for key in ("T", "w", "noise_power", "eta", "rho", "carrier_freq", "tau"):
        lines.append(f"{key} = {getattr(config, key)!r}")
    lines.append("delta = " + ",".join(repr(v) for v in config.delta))
    lines.append("distances = " + ",".join(repr(v) for v in config.distances))
    if alpha is not None:
        lines.append(f"alpha = {alpha!r}")
    if p_ce is not None:
        lines.append(f"p_ce = {p_ce!r}")
    if zeta is not None:
        lines.append("zeta = " + ",".join(repr(float(v)) for v in zeta))
    return "\n".join(lines) + "\n"


def write_scenario(path, config, alpha=None, p_ce=None, zeta=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario_text(config, alpha=alpha, p_ce=p_ce, zeta=zeta))
