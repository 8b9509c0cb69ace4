"""System model: dimensions and variances, training plans, budgets, channel draws.

The two supported training schemes are named by how the transmitter learns the
legitimate receiver's channel:

* ``"reciprocal"``   -- LR sends a reverse pilot, the transmitter estimates the
  (shared) channel directly, then trains forward with embedded artificial noise.
* ``"nonreciprocal"``-- uplink and downlink are independent; the transmitter
  learns the downlink through a pilot / amplify-and-echo / uplink-pilot round
  trip before the guarded forward stage.

All energy bookkeeping is in linear units; ``db_to_energy`` converts the
per-channel-use dB powers used in config files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .numerics import RngStream, random_gaussian

__all__ = [
    "RECIPROCAL",
    "NONRECIPROCAL",
    "AllocationError",
    "ChannelRealization",
    "ConfigError",
    "EnergyBudget",
    "PowerAllocation",
    "RunSettings",
    "SystemConfig",
    "TrainingPlan",
    "allocation_violations",
    "db_to_energy",
    "draw_channels",
    "load_config",
    "nonreciprocal_plan",
    "parse_config",
    "reciprocal_plan",
    "training_lengths",
    "validate",
]

RECIPROCAL = "reciprocal"
NONRECIPROCAL = "nonreciprocal"
_SCHEMES = (RECIPROCAL, NONRECIPROCAL)

# Tolerance for "sums to n_t" / "equals n_t/K" checks on pilot eigenvalues.
_EIG_ATOL = 1e-9


class ConfigError(ValueError):
    """Bad config file: unknown key, missing key, or unparsable value."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class AllocationError(ValueError):
    """Power allocation is malformed or infeasible for the requested run."""


@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts and second-order statistics of channels and noises."""

    n_t: int  # transmit antennas
    n_l: int  # legitimate-receiver antennas (n_t > n_l >= 1)
    n_u: int  # unauthorized-receiver antennas

    var_h: float = 1.0   # reciprocal LR channel variance (per entry)
    var_hu: float = 1.0  # non-reciprocal uplink variance
    var_hd: float = 1.0  # non-reciprocal downlink variance
    var_g: float = 1.0   # UR channel variance

    var_wt: float = 1.0  # noise variance at the transmitter
    var_w: float = 1.0   # noise variance at LR
    var_v: float = 1.0   # noise variance at UR


@dataclass(frozen=True)
class TrainingPlan:
    """Pilot lengths and the forward pilot Gram eigenvalue profile.

    ``pilot_eigs`` are the eigenvalues of the (unscaled) forward pilot Gram
    ``C^H C``: ``n_t`` nonnegative entries summing to ``n_t``, of which exactly
    ``pilot_rank`` are nonzero and equal to ``n_t / pilot_rank``.  Use
    :func:`reciprocal_plan` / :func:`nonreciprocal_plan` to get the minimal
    plan with sensible defaults.
    """

    scheme: str
    pilot_rank: int
    pilot_eigs: tuple[float, ...]

    # reciprocal lengths
    tau_r: int | None = None  # reverse pilot (>= n_l)
    tau_f: int | None = None  # forward pilot (>= n_t)

    # non-reciprocal lengths
    tau_t0: int | None = None  # initial downlink pilot (== n_t, square unitary)
    tau_l2: int | None = None  # uplink pilot (>= n_l)
    tau_t3: int | None = None  # guarded forward pilot (>= n_t)


def _uniform_eigs(n_t: int, rank: int) -> tuple[float, ...]:
    eigs = [n_t / rank] * rank + [0.0] * (n_t - rank)
    return tuple(eigs)


def reciprocal_plan(
    config: SystemConfig,
    tau_r: int | None = None,
    tau_f: int | None = None,
    pilot_rank: int | None = None,
) -> TrainingPlan:
    """Minimal-length reciprocal plan (full-rank forward pilot by default)."""
    rank = config.n_t if pilot_rank is None else pilot_rank
    return TrainingPlan(
        scheme=RECIPROCAL,
        pilot_rank=rank,
        pilot_eigs=_uniform_eigs(config.n_t, rank),
        tau_r=config.n_l if tau_r is None else tau_r,
        tau_f=config.n_t if tau_f is None else tau_f,
    )


def nonreciprocal_plan(
    config: SystemConfig,
    tau_l2: int | None = None,
    tau_t3: int | None = None,
    pilot_rank: int | None = None,
) -> TrainingPlan:
    """Minimal-length non-reciprocal plan (``tau_t0`` is pinned to ``n_t``)."""
    rank = config.n_t if pilot_rank is None else pilot_rank
    return TrainingPlan(
        scheme=NONRECIPROCAL,
        pilot_rank=rank,
        pilot_eigs=_uniform_eigs(config.n_t, rank),
        tau_t0=config.n_t,
        tau_l2=config.n_l if tau_l2 is None else tau_l2,
        tau_t3=config.n_t if tau_t3 is None else tau_t3,
    )


def training_lengths(plan: TrainingPlan) -> tuple[int, int]:
    """(transmitter-side, LR-side) channel uses consumed by the plan.

    The echo stage of the non-reciprocal scheme occupies both ends, so it
    counts toward the LR total as well.
    """
    if plan.scheme == RECIPROCAL:
        return int(plan.tau_f), int(plan.tau_r)
    return int(plan.tau_t0) + int(plan.tau_t3), int(plan.tau_t0) + int(plan.tau_l2)


@dataclass(frozen=True)
class EnergyBudget:
    """Per-node energy caps, an optional total cap, and the leakage target."""

    e_t_max: float            # transmitter training energy cap
    e_l_max: float            # LR training energy cap
    gamma: float              # NMSE floor imposed on the unauthorized receiver
    e_ave_max: float = math.inf  # total (both-node) cap; inf disables it


@dataclass(frozen=True)
class PowerAllocation:
    """Energy split for one training round.  Unused fields stay ``None``."""

    scheme: str
    var_a: float = 0.0        # artificial-noise variance per AN dimension

    # reciprocal
    e_r: float | None = None  # reverse pilot energy
    e_f: float | None = None  # forward pilot energy

    # non-reciprocal
    e_t0: float | None = None  # initial downlink pilot energy
    e_l1: float | None = None  # echo (amplify-and-forward) energy
    e_l2: float | None = None  # uplink pilot energy
    e_t3: float | None = None  # guarded forward pilot energy

    def energies(self) -> tuple[float, ...]:
        if self.scheme == RECIPROCAL:
            return (self.e_r, self.e_f, self.var_a)
        return (self.e_t0, self.e_l1, self.e_l2, self.e_t3, self.var_a)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of every channel the active scheme uses.

    Shapes: ``h`` and ``h_d`` are ``n_t x n_l``; ``h_u`` is ``n_l x n_t``
    (uplink); ``g`` is ``n_t x n_u``.
    """

    g: np.ndarray
    h: np.ndarray | None = None
    h_d: np.ndarray | None = None
    h_u: np.ndarray | None = None


def _config_violations(config: SystemConfig) -> list[str]:
    out = []
    if config.n_l < 1:
        out.append(f"n_l: must be >= 1, got {config.n_l}")
    if config.n_t <= config.n_l:
        out.append(f"n_t: must exceed n_l, got n_t={config.n_t}, n_l={config.n_l}")
    if config.n_u < 1:
        out.append(f"n_u: must be >= 1, got {config.n_u}")
    for name in ("var_h", "var_hu", "var_hd", "var_g"):
        if getattr(config, name) < 0:
            out.append(f"{name}: channel variance must be >= 0, got {getattr(config, name)}")
    for name in ("var_wt", "var_w", "var_v"):
        if getattr(config, name) <= 0:
            out.append(f"{name}: noise variance must be > 0, got {getattr(config, name)}")
    return out


def _plan_violations(config: SystemConfig, plan: TrainingPlan) -> list[str]:
    out = []
    if plan.scheme not in _SCHEMES:
        out.append(f"scheme: must be one of {_SCHEMES}, got {plan.scheme!r}")
        return out
    if plan.scheme == RECIPROCAL:
        if plan.tau_r is None or plan.tau_r < config.n_l:
            out.append(f"tau_r: must be >= n_l={config.n_l}, got {plan.tau_r}")
        if plan.tau_f is None or plan.tau_f < config.n_t:
            out.append(f"tau_f: must be >= n_t={config.n_t}, got {plan.tau_f}")
    else:
        if plan.tau_t0 is None or plan.tau_t0 != config.n_t:
            out.append(f"tau_t0: must equal n_t={config.n_t} (square unitary pilot), got {plan.tau_t0}")
        if plan.tau_l2 is None or plan.tau_l2 < config.n_l:
            out.append(f"tau_l2: must be >= n_l={config.n_l}, got {plan.tau_l2}")
        if plan.tau_t3 is None or plan.tau_t3 < config.n_t:
            out.append(f"tau_t3: must be >= n_t={config.n_t}, got {plan.tau_t3}")
    if not 1 <= plan.pilot_rank <= config.n_t:
        out.append(f"pilot_rank: must lie in 1..{config.n_t}, got {plan.pilot_rank}")
        return out
    d = np.asarray(plan.pilot_eigs, dtype=float)
    if d.shape != (config.n_t,):
        out.append(f"pilot_eigs: need {config.n_t} entries, got shape {d.shape}")
        return out
    if np.any(d < 0):
        out.append("pilot_eigs: entries must be nonnegative")
    if abs(d.sum() - config.n_t) > _EIG_ATOL:
        out.append(f"pilot_eigs: must sum to n_t={config.n_t}, got {d.sum()!r}")
    nonzero = d[d > _EIG_ATOL]
    if nonzero.size != plan.pilot_rank:
        out.append(
            f"pilot_eigs: expected exactly pilot_rank={plan.pilot_rank} nonzero entries, got {nonzero.size}"
        )
    elif np.any(np.abs(nonzero - config.n_t / plan.pilot_rank) > _EIG_ATOL):
        out.append(
            f"pilot_eigs: nonzero entries must all equal n_t/K = {config.n_t / plan.pilot_rank}"
        )
    return out


def _budget_violations(config: SystemConfig, budget: EnergyBudget) -> list[str]:
    out = []
    if budget.e_t_max <= 0:
        out.append(f"e_t_max: must be > 0, got {budget.e_t_max}")
    if budget.e_l_max <= 0:
        out.append(f"e_l_max: must be > 0, got {budget.e_l_max}")
    if budget.e_ave_max <= 0:
        out.append(f"e_ave_max: must be > 0 (or omitted), got {budget.e_ave_max}")
    if not 0 < budget.gamma <= config.var_g:
        out.append(f"gamma: must lie in (0, var_g={config.var_g}], got {budget.gamma}")
    return out


def validate(
    config: SystemConfig, plan: TrainingPlan, budget: EnergyBudget | None = None
) -> list[str]:
    """Total validation: returns all violated invariants (empty list == ok).

    Never raises; each diagnostic starts with the offending field name, and
    the first entry is the first violation found in declaration order.
    """
    out = _config_violations(config)
    if not out:
        out += _plan_violations(config, plan)
    if budget is not None and not out:
        out += _budget_violations(config, budget)
    return out


def allocation_violations(
    alloc: PowerAllocation,
    config: SystemConfig,
    plan: TrainingPlan,
    budget: EnergyBudget | None = None,
) -> list[str]:
    """Feasibility diagnostics for an allocation (empty list == feasible).

    Without a budget only well-formedness is checked (matching scheme, no
    missing fields, nonnegative energies).  With a budget the per-node caps —
    artificial noise billed as ``(n_t - n_l) * var_a *`` (pilot length /
    ``n_t``) — and the optional total cap are enforced too.
    """
    out = []
    if alloc.scheme != plan.scheme:
        out.append(f"scheme: allocation is {alloc.scheme!r} but plan is {plan.scheme!r}")
        return out
    names = ("e_r", "e_f") if alloc.scheme == RECIPROCAL else ("e_t0", "e_l1", "e_l2", "e_t3")
    for name in names:
        val = getattr(alloc, name)
        if val is None:
            out.append(f"{name}: required for scheme {alloc.scheme!r}")
        elif val < 0:
            out.append(f"{name}: must be >= 0, got {val}")
    if alloc.var_a < 0:
        out.append(f"var_a: must be >= 0, got {alloc.var_a}")
    if out or budget is None:
        return out

    an_dims = config.n_t - config.n_l
    if alloc.scheme == RECIPROCAL:
        tx_spend = alloc.e_f + an_dims * alloc.var_a * plan.tau_f
        lr_spend = alloc.e_r
    else:
        tx_spend = alloc.e_t0 + alloc.e_t3 + an_dims * alloc.var_a * config.n_t
        lr_spend = alloc.e_l1 + alloc.e_l2
    tol = 1e-9
    if tx_spend > budget.e_t_max * (1 + tol) + tol:
        out.append(f"e_t_max: transmitter spend {tx_spend} exceeds cap {budget.e_t_max}")
    if lr_spend > budget.e_l_max * (1 + tol) + tol:
        out.append(f"e_l_max: LR spend {lr_spend} exceeds cap {budget.e_l_max}")
    if math.isfinite(budget.e_ave_max):
        total = tx_spend + lr_spend
        if total > budget.e_ave_max * (1 + tol) + tol:
            out.append(f"e_ave_max: total spend {total} exceeds cap {budget.e_ave_max}")
    return out


def draw_channels(
    config: SystemConfig, scheme: str, rng: RngStream
) -> ChannelRealization:
    """Draw one realization of the channels used by ``scheme``."""
    if scheme == RECIPROCAL:
        h = random_gaussian(config.n_t, config.n_l, config.var_h, rng)
        g = random_gaussian(config.n_t, config.n_u, config.var_g, rng)
        return ChannelRealization(g=g, h=h)
    if scheme == NONRECIPROCAL:
        h_d = random_gaussian(config.n_t, config.n_l, config.var_hd, rng)
        h_u = random_gaussian(config.n_l, config.n_t, config.var_hu, rng)
        g = random_gaussian(config.n_t, config.n_u, config.var_g, rng)
        return ChannelRealization(g=g, h_d=h_d, h_u=h_u)
    raise ValueError(f"unknown scheme {scheme!r}")


def db_to_energy(p_db: float, tau: int) -> float:
    """Energy of a ``tau``-use stage transmitted at ``p_db`` dB average power."""
    if tau < 1:
        raise ValueError(f"stage length must be >= 1, got {tau}")
    return 10.0 ** (p_db / 10.0) * tau


# --------------------------------------------------------------------------
# Config files: flat "key = value" lines, '#' comments, a fixed key set.
# --------------------------------------------------------------------------

_INT_KEYS = {"nt", "nl", "nu", "tau_r", "tau_f", "tau_t0", "tau_l2", "tau_t3",
             "pilot_rank", "trials", "seed"}
_FLOAT_KEYS = {"var_h", "var_hu", "var_hd", "var_g", "var_wt", "var_w", "var_v",
               "gamma", "pt_db", "pl_db", "pave_db"}
_STR_KEYS = {"scheme"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_REQUIRED_KEYS = ("nt", "nl", "nu", "scheme", "gamma")


@dataclass(frozen=True)
class RunSettings:
    """Everything a CLI run needs: model, plan, powers, and MC bookkeeping."""

    config: SystemConfig
    plan: TrainingPlan
    gamma: float
    pt_db: float
    pl_db: float
    pave_db: float | None
    trials: int
    seed: int

    def budget(self, pave_db: float | None = None, gamma: float | None = None) -> EnergyBudget:
        """Budget implied by the dB powers; ``pave_db``/``gamma`` may be overridden."""
        tau_t, tau_l = training_lengths(self.plan)
        pave = self.pave_db if pave_db is None else pave_db
        e_ave = math.inf if pave is None else db_to_energy(pave, tau_t + tau_l)
        return EnergyBudget(
            e_t_max=db_to_energy(self.pt_db, tau_t),
            e_l_max=db_to_energy(self.pl_db, tau_l),
            gamma=self.gamma if gamma is None else gamma,
            e_ave_max=e_ave,
        )

    def with_plan(self, plan: TrainingPlan) -> "RunSettings":
        return replace(self, plan=plan)


def parse_config(text: str) -> RunSettings:
    """Parse config text.  Unknown or missing keys raise :class:`ConfigError`."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key: {key!r}", key=key)
        if key in raw:
            raise ConfigError(f"duplicate config key: {key!r}", key=key)
        raw[key] = value

    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing config key: {key!r}", key=key)

    def to_int(key: str, default: int | None = None) -> int | None:
        if key not in raw:
            return default
        try:
            return int(raw[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: expected integer, got {raw[key]!r}", key=key) from exc

    def to_float(key: str, default: float | None = None) -> float | None:
        if key not in raw:
            return default
        try:
            return float(raw[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: expected number, got {raw[key]!r}", key=key) from exc

    scheme = raw["scheme"]
    if scheme not in _SCHEMES:
        raise ConfigError(f"config key 'scheme': must be one of {_SCHEMES}, got {scheme!r}", key="scheme")

    config = SystemConfig(
        n_t=to_int("nt"), n_l=to_int("nl"), n_u=to_int("nu"),
        var_h=to_float("var_h", 1.0), var_hu=to_float("var_hu", 1.0),
        var_hd=to_float("var_hd", 1.0), var_g=to_float("var_g", 1.0),
        var_wt=to_float("var_wt", 1.0), var_w=to_float("var_w", 1.0),
        var_v=to_float("var_v", 1.0),
    )
    bad = _config_violations(config)
    if bad:
        raise ConfigError(f"config: {bad[0]}", key=bad[0].split(":", 1)[0])

    if scheme == RECIPROCAL:
        plan = reciprocal_plan(config, tau_r=to_int("tau_r"), tau_f=to_int("tau_f"),
                               pilot_rank=to_int("pilot_rank"))
    else:
        plan = nonreciprocal_plan(config, tau_l2=to_int("tau_l2"), tau_t3=to_int("tau_t3"),
                                  pilot_rank=to_int("pilot_rank"))
        if to_int("tau_t0") not in (None, config.n_t):
            raise ConfigError(
                f"config key 'tau_t0': must equal nt={config.n_t}, got {raw['tau_t0']}", key="tau_t0"
            )
    bad = _plan_violations(config, plan)
    if bad:
        raise ConfigError(f"config: {bad[0]}", key=bad[0].split(":", 1)[0])

    gamma = to_float("gamma")
    if not 0 < gamma <= config.var_g:
        raise ConfigError(f"config key 'gamma': must lie in (0, var_g={config.var_g}], got {gamma}", key="gamma")

    trials = to_int("trials", 10000)
    if trials < 1:
        raise ConfigError(f"config key 'trials': must be >= 1, got {trials}", key="trials")

    return RunSettings(
        config=config,
        plan=plan,
        gamma=gamma,
        pt_db=to_float("pt_db", 30.0),
        pl_db=to_float("pl_db", 20.0),
        pave_db=to_float("pave_db", None),
        trials=trials,
        seed=to_int("seed", 0),
    )


def load_config(path: str | Path) -> RunSettings:
    """Read and parse a config file (see :func:`parse_config`)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)
