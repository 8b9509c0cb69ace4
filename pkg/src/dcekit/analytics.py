r"""Closed-form NMSE expressions, feasibility ranges, and protocol constants.

Notation used throughout (all per-entry variances):

======================  =====================================================
``var_h``               reciprocal channel prior
``var_hd`` / ``var_hu`` non-reciprocal downlink / uplink priors
``var_g``               unauthorized receiver's channel prior
``var_wt``              transmitter-side noise, ``var_w`` LR noise, ``var_v``
                        UR noise
``d``                   eigenvalue profile of the unscaled forward pilot Gram
                        (``n_t`` entries summing to ``n_t``)
======================  =====================================================

The reciprocal formulas are exact for the LMMSE estimators in
:mod:`dcekit.estimator`.  The non-reciprocal LR formula is an approximation:
the random per-realization effective noise is replaced by its mean, with the
largest eigenvalue of the uplink-estimate Gram collapsed to its expectation
``n_t * sigma^2`` (a Jensen step).  Monte Carlo agreement at operating SNRs
is part of the acceptance suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    NONRECIPROCAL,
    RECIPROCAL,
    PowerAllocation,
    SystemConfig,
    TrainingPlan,
)

__all__ = [
    "FeasibleGammaRange",
    "alpha_gain",
    "beta",
    "downlink_error_floor",
    "gamma_range",
    "gamma_tilde",
    "mu",
    "nmse_l_nonreciprocal_approx",
    "nmse_l_reciprocal",
    "nmse_lower_bound",
    "nmse_u",
    "nonreciprocal_effective_noise",
    "sigma_sq",
]


@dataclass(frozen=True)
class FeasibleGammaRange:
    """Feasible leakage-target window and the transformed threshold.

    A target ``gamma`` is achievable iff ``lo <= gamma <= hi``, equivalently
    iff ``0 <= gamma_tilde <= e_t_max``.  ``gamma_tilde`` / ``feasible`` are
    populated only when a concrete ``gamma`` was supplied.
    """

    lo: float
    hi: float
    gamma_tilde: float | None = None
    feasible: bool | None = None

    def contains(self, gamma: float) -> bool:
        return self.lo <= gamma <= self.hi


def gamma_tilde(config: SystemConfig, gamma: float) -> float:
    """Transformed leakage threshold ``(1/gamma - 1/var_g) * n_t * var_v``."""
    return (1.0 / gamma - 1.0 / config.var_g) * config.n_t * config.var_v


def gamma_range(
    config: SystemConfig, e_t_max: float, gamma: float | None = None
) -> FeasibleGammaRange:
    """Feasible window for the UR NMSE floor given the transmitter cap.

    The lower edge is UR's best NMSE when the whole cap is spent on an
    unguarded forward pilot, ``(1/var_g + e_t_max/(n_t var_v))^{-1}``; the
    upper edge is the prior ``var_g`` (reached by sending nothing).
    """
    lo = 1.0 / (1.0 / config.var_g + e_t_max / (config.n_t * config.var_v))
    hi = config.var_g
    if gamma is None:
        return FeasibleGammaRange(lo=lo, hi=hi)
    gt = gamma_tilde(config, gamma)
    return FeasibleGammaRange(lo=lo, hi=hi, gamma_tilde=gt, feasible=lo <= gamma <= hi)


def _per_direction_nmse(prior: float, gains: np.ndarray, n_t: int) -> float:
    """Mean of ``(1/prior + gain_i)^{-1}`` over all ``n_t`` directions."""
    if prior == 0.0:
        return 0.0
    return float(np.mean(1.0 / (1.0 / prior + gains)))


def nmse_l_reciprocal(
    config: SystemConfig,
    e_r: float,
    e_f: float,
    var_a: float,
    d: np.ndarray | tuple[float, ...],
) -> float:
    r"""LR's forward-stage NMSE under the reciprocal scheme (exact).

    .. math::
        \frac{1}{N_t} \sum_i \Big( \frac{1}{\sigma_h^2} +
            \frac{(E_F/N_t)\, d_i}{\bar{r}} \Big)^{-1},
        \qquad
        \bar{r} = (N_t - N_L)\Big(\frac{1}{\sigma_h^2} +
            \frac{E_R}{N_L \sigma_{\tilde w}^2}\Big)^{-1} \sigma_a^2
            + \sigma_w^2 .

    ``r_bar`` is the per-entry effective forward noise: residual
    artificial-noise leakage (shrinking as the reverse energy ``e_r`` grows)
    plus LR thermal noise.
    """
    d = np.asarray(d, dtype=float)
    delta2 = 1.0 / (1.0 / config.var_h + e_r / (config.n_l * config.var_wt))
    r_bar = (config.n_t - config.n_l) * delta2 * var_a + config.var_w
    gains = (e_f / config.n_t) * d / r_bar
    return _per_direction_nmse(config.var_h, gains, config.n_t)


def nmse_u(
    config: SystemConfig,
    e_f: float,
    var_a: float,
    d: np.ndarray | tuple[float, ...],
) -> float:
    """UR's forward-stage NMSE (exact; same form for both schemes).

    UR faces the full artificial noise: per-entry disturbance
    ``(n_t - n_l) * var_a * var_g + var_v``.
    """
    d = np.asarray(d, dtype=float)
    r_u = (config.n_t - config.n_l) * var_a * config.var_g + config.var_v
    gains = (e_f / config.n_t) * d / r_u
    return _per_direction_nmse(config.var_g, gains, config.n_t)


def mu(config: SystemConfig) -> float:
    r"""Reverse-energy threshold deciding whether reverse training pays off.

    .. math::
        \mu = N_L\Big( \frac{\sigma_v^2 \sigma_{\tilde w}^2}
                            {\sigma_g^2 \sigma_w^2}
                     - \frac{\sigma_{\tilde w}^2}{\sigma_h^2} \Big)

    When the LR energy cap cannot reach ``mu``, spending anything on the
    reverse pilot is wasteful and the optimal reciprocal allocation degrades
    gracefully to forward-only training without artificial noise.
    """
    return config.n_l * (
        config.var_v * config.var_wt / (config.var_g * config.var_w)
        - config.var_wt / config.var_h
    )


def alpha_gain(
    config: SystemConfig, e_t0: float, e_l1: float, tau_t0: int
) -> float:
    """Echo amplification obeying LR's energy ``e_l1``:
    ``sqrt(e_l1 / (e_t0 n_l var_hd + tau_t0 n_l var_w))``."""
    denom = e_t0 * config.n_l * config.var_hd + tau_t0 * config.n_l * config.var_w
    return math.sqrt(e_l1 / denom)


def beta(config: SystemConfig, e_t0: float, e_l2: float, alpha: float) -> float:
    r"""Regularizer in the transmitter's echo-based downlink estimator.

    .. math::
        \beta = N_L\Big(\frac{1}{\sigma_{h_u}^2} +
                    \frac{E_{L2}}{N_L \sigma_{\tilde w}^2}\Big)^{-1}
              + \frac{N_t \sigma_{\tilde w}^2}{\alpha^2 q},
        \qquad q = \sigma_{h_d}^2 E_{t0} + N_t \sigma_w^2 .

    The first term is the uplink estimation error, the second the echo noise
    referred through the amplification.  ``alpha == 0`` (no echo energy)
    returns ``inf``: the echo carries no signal.
    """
    if alpha == 0.0:
        return math.inf
    delta_u2 = 1.0 / (1.0 / config.var_hu + e_l2 / (config.n_l * config.var_wt))
    q = config.var_hd * e_t0 + config.n_t * config.var_w
    return config.n_l * delta_u2 + config.n_t * config.var_wt / (alpha**2 * q)


def sigma_sq(config: SystemConfig, e_l2: float) -> float:
    """Per-entry variance of the uplink *estimate* (prior minus error):
    ``var_hu^2 e_l2 / (var_hu e_l2 + n_l var_wt)``."""
    return (
        config.var_hu**2 * e_l2 / (config.var_hu * e_l2 + config.n_l * config.var_wt)
    )


def downlink_error_floor(
    config: SystemConfig, e_t0: float, e_l1: float, e_l2: float, tau_t0: int
) -> float:
    r"""Typical per-entry error of the transmitter's echo-based downlink estimate.

    .. math::
        \sigma_{h_d}^2 - \sigma_{h_d}^2 \rho_0
            \frac{N_t \sigma^2}{\beta + N_t \sigma^2},
        \qquad \rho_0 = \frac{\sigma_{h_d}^2 E_{t0}}{q},

    i.e. the conditional error with the uplink-estimate Gram eigenvalues
    collapsed to their mean ``n_t * sigma^2`` (a Jensen step).  Degrades to
    the full prior ``var_hd`` when the echo or the initial pilot is unpowered.
    """
    a = alpha_gain(config, e_t0, e_l1, tau_t0)
    if a == 0.0 or e_t0 == 0.0:
        return config.var_hd  # no usable echo: downlink error is the full prior
    b = beta(config, e_t0, e_l2, a)
    s2 = sigma_sq(config, e_l2)
    q = config.var_hd * e_t0 + config.n_t * config.var_w
    rho0 = config.var_hd * e_t0 / q
    shrink = config.n_t * s2 / (b + config.n_t * s2) if math.isfinite(b) else 0.0
    return config.var_hd - config.var_hd * rho0 * shrink


def nonreciprocal_effective_noise(
    config: SystemConfig, alloc: PowerAllocation, plan: TrainingPlan
) -> float:
    r"""Effective per-entry forward noise LR faces in the non-reciprocal scheme.

    .. math::
        \bar{D} = (N_t - N_L)\,\sigma_a^2\,
            \mathrm{err}(E_{t0}, E_{L1}, E_{L2}) + \sigma_w^2

    with ``err`` from :func:`downlink_error_floor`: the artificial noise
    leaks through the transmitter's downlink estimation error before adding
    to LR thermal noise.  Reduces to ``var_w`` exactly when ``var_a == 0``.
    """
    if alloc.var_a == 0.0:
        return config.var_w
    err = downlink_error_floor(config, alloc.e_t0, alloc.e_l1, alloc.e_l2, plan.tau_t0)
    return (config.n_t - config.n_l) * alloc.var_a * err + config.var_w


def nmse_l_nonreciprocal_approx(
    config: SystemConfig, alloc: PowerAllocation, plan: TrainingPlan
) -> float:
    r"""LR's forward NMSE under the non-reciprocal scheme (approximation).

    Same per-direction form as the reciprocal case but with the effective
    noise :func:`nonreciprocal_effective_noise`.  Exact when ``var_a == 0``
    (the downlink-error bracket no longer matters); otherwise the Monte Carlo
    agreement at operating SNRs is checked by the acceptance suite.
    """
    if alloc.scheme != NONRECIPROCAL:
        raise ValueError(f"allocation scheme must be {NONRECIPROCAL!r}, got {alloc.scheme!r}")
    d = np.asarray(plan.pilot_eigs, dtype=float)
    d_bar = nonreciprocal_effective_noise(config, alloc, plan)
    gains = (alloc.e_t3 / config.n_t) * d / d_bar
    return _per_direction_nmse(config.var_hd, gains, config.n_t)


def nmse_lower_bound(
    config: SystemConfig,
    e_t_max: float,
    e_ave_max: float = math.inf,
    scheme: str = RECIPROCAL,
) -> float:
    """Genie lower bound on LR's NMSE under the energy caps.

    No scheme can beat spending every available joule on an unguarded
    forward pilot: ``(1/prior + min(e_t_max, e_ave_max)/(n_t var_w))^{-1}``
    with the prior chosen by ``scheme``.
    """
    prior = config.var_h if scheme == RECIPROCAL else config.var_hd
    budget = min(e_t_max, e_ave_max)
    return 1.0 / (1.0 / prior + budget / (config.n_t * config.var_w))
