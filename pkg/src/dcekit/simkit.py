r"""Monte-Carlo harness: NMSE validation runs and coded-data SER runs.

Trials are processed in fixed chunks of :data:`CHUNK`; chunk ``i`` draws from
its own counter-based stream ``RngStream(seed, i)`` and partial sums are
reduced in chunk order, so results are byte-identical for any ``workers``
value.  Workers are threads (the heavy lifting is batched linear algebra,
which releases the GIL).

The data phase uses a rate-3/4 orthogonal space-time block code over four
transmit antennas carrying three unit-energy 64-QAM symbols per block.  For
orthogonal designs, coherent ML detection with an (imperfect) channel
estimate reduces to linear combining plus per-symbol nearest-neighbor
slicing, which is what :func:`ostbc_detect` implements; feeding it the true
channel gives the perfect-CSI baseline.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytics
from .model import (
    NONRECIPROCAL,
    RECIPROCAL,
    PowerAllocation,
    SystemConfig,
    TrainingPlan,
)
from .numerics import RngStream
from .protocol import _check_inputs, _cn, _nonreciprocal_core, _reciprocal_core

__all__ = [
    "CHUNK",
    "NmseReport",
    "QAM4",
    "QAM64",
    "SerReport",
    "mc_nmse",
    "mc_ser",
    "ostbc_encode",
    "ostbc_detect",
]

CHUNK = 4096

_WILSON_Z = 1.96  # 95% two-sided


def _square_qam(levels: np.ndarray) -> np.ndarray:
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / math.sqrt(float(np.mean(np.abs(pts) ** 2)))


#: Unit-average-energy square constellations.
QAM64 = _square_qam(np.array([-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0]))
QAM4 = _square_qam(np.array([-1.0, 1.0]))


@dataclass(frozen=True)
class NmseReport:
    """Empirical vs closed-form NMSE from one Monte-Carlo run.

    NMSE is the per-entry mean squared estimation error, i.e.
    ``E ||H - H_hat||_F^2 / (n_t * n_l)``; ``*_se`` are standard errors of
    the empirical means.  ``nmse_l_closed`` is exact for the reciprocal
    scheme and the high-accuracy approximation for the non-reciprocal one.
    """

    trials: int
    nmse_l: float
    nmse_l_se: float
    nmse_u: float
    nmse_u_se: float
    nmse_l_closed: float
    nmse_u_closed: float


@dataclass(frozen=True)
class SerReport:
    """Symbol error rates from one Monte-Carlo data-phase run.

    ``*_ci`` are 95% Wilson-interval halfwidths on the corresponding rate;
    ``ser_l_perfect`` is LR's SER when detection uses the true channel
    instead of its estimate (the perfect-CSI baseline).
    """

    trials: int
    data_power: float
    ser_l: float
    ser_l_ci: float
    ser_u: float
    ser_u_ci: float
    ser_l_perfect: float
    ser_l_perfect_ci: float


def _chunk_sizes(trials: int) -> list[int]:
    full, rem = divmod(trials, CHUNK)
    return [CHUNK] * full + ([rem] if rem else [])


def _run_chunks(worker, n_chunks: int, workers: int) -> list:
    if workers <= 1:
        return [worker(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, range(n_chunks)))


def _core_for(scheme: str):
    return _reciprocal_core if scheme == RECIPROCAL else _nonreciprocal_core


def mc_nmse(
    config: SystemConfig,
    plan: TrainingPlan,
    alloc: PowerAllocation,
    trials: int,
    seed: int,
    workers: int = 1,
) -> NmseReport:
    """Estimate LR/UR training NMSE empirically and pair it with closed forms."""
    if trials < 100:
        raise ValueError(f"need at least 100 trials for a meaningful run, got {trials}")
    _check_inputs(config, plan, alloc, plan.scheme)
    core = _core_for(plan.scheme)
    sizes = _chunk_sizes(trials)
    norm_l = config.n_t * config.n_l
    norm_u = config.n_t * config.n_u

    def one_chunk(i: int):
        out = core(config, plan, alloc, RngStream(seed, i).generator, batch=sizes[i])
        xl = out["sq_lr"] / norm_l
        xu = out["sq_ur"] / norm_u
        return (
            float(xl.sum()), float((xl * xl).sum()),
            float(xu.sum()), float((xu * xu).sum()),
        )

    parts = _run_chunks(one_chunk, len(sizes), workers)
    sum_l = sumsq_l = sum_u = sumsq_u = 0.0
    for a, b, c, d in parts:  # fixed chunk order: identical for any worker count
        sum_l += a
        sumsq_l += b
        sum_u += c
        sumsq_u += d

    n = trials
    mean_l, mean_u = sum_l / n, sum_u / n
    se_l = math.sqrt(max(sumsq_l - n * mean_l**2, 0.0) / (n - 1) / n)
    se_u = math.sqrt(max(sumsq_u - n * mean_u**2, 0.0) / (n - 1) / n)

    d_prof = plan.pilot_eigs
    if plan.scheme == RECIPROCAL:
        cf_l = analytics.nmse_l_reciprocal(config, alloc.e_r, alloc.e_f, alloc.var_a, d_prof)
        e_fwd = alloc.e_f
    else:
        cf_l = analytics.nmse_l_nonreciprocal_approx(config, alloc, plan)
        e_fwd = alloc.e_t3
    cf_u = analytics.nmse_u(config, e_fwd, alloc.var_a, d_prof)
    return NmseReport(
        trials=n, nmse_l=mean_l, nmse_l_se=se_l, nmse_u=mean_u, nmse_u_se=se_u,
        nmse_l_closed=cf_l, nmse_u_closed=cf_u,
    )


# ---------------------------------------------------------------------------
# Rate-3/4 orthogonal space-time block code over 4 antennas.
# ---------------------------------------------------------------------------


def ostbc_encode(s1, s2, s3) -> np.ndarray:
    """Map three symbols to the 4x4 rate-3/4 orthogonal codeword.

    Inputs may be scalars or broadcastable arrays; the codeword axes are the
    last two of the output (time x antenna).  The design satisfies
    ``X X^H = (|s1|^2+|s2|^2+|s3|^2) I`` for every input triple.
    """
    s1, s2, s3 = np.broadcast_arrays(
        np.asarray(s1, dtype=complex), np.asarray(s2, dtype=complex), np.asarray(s3, dtype=complex)
    )
    zero = np.zeros_like(s1)
    rows = [
        [s1, s2, s3, zero],
        [-s2.conj(), s1.conj(), zero, s3],
        [-s3.conj(), zero, s1.conj(), -s2],
        [zero, -s3.conj(), s2.conj(), s1],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


# Real-linear expansion basis: codewords of the 6 unit real coordinates
# (Re s1, Im s1, Re s2, Im s2, Re s3, Im s3).
_OSTBC_BASIS = np.stack([
    ostbc_encode(1, 0, 0), ostbc_encode(1j, 0, 0),
    ostbc_encode(0, 1, 0), ostbc_encode(0, 1j, 0),
    ostbc_encode(0, 0, 1), ostbc_encode(0, 0, 1j),
])


def ostbc_detect(
    y: np.ndarray,
    h_hat: np.ndarray,
    scale: float = 1.0,
    constellation: np.ndarray | None = None,
) -> np.ndarray:
    """Coherent ML detection of a rate-3/4 block against a channel estimate.

    ``y`` is the received block ``(..., 4, n_r)`` for transmitted
    ``scale * ostbc_encode(s1, s2, s3) @ H``; ``h_hat`` the ``(..., 4, n_r)``
    channel estimate used for detection (pass the true channel for the
    perfect-CSI baseline).  Returns the detected symbols ``(..., 3)`` as
    constellation values (default 64-QAM).  Orthogonality of the design makes
    exact ML decouple into per-real-coordinate correlations followed by
    nearest-neighbor slicing, so this stays cheap at any constellation size.
    """
    if constellation is None:
        constellation = QAM64
    h_energy = np.sum(h_hat.real**2 + h_hat.imag**2, axis=(-2, -1))
    denom = scale * np.maximum(h_energy, 1e-300)
    coords = []
    for b_k in _OSTBC_BASIS:
        phi = b_k @ h_hat
        corr = np.sum((phi.conj() * y).real, axis=(-2, -1))
        coords.append(corr / denom)
    s_soft = np.stack(
        [coords[0] + 1j * coords[1], coords[2] + 1j * coords[3], coords[4] + 1j * coords[5]],
        axis=-1,
    )
    idx = np.argmin(np.abs(s_soft[..., None] - constellation) ** 2, axis=-1)
    return constellation[idx]


def _wilson_halfwidth(errors: int, n: int) -> float:
    z = _WILSON_Z
    p = errors / n
    return z * math.sqrt(p * (1.0 - p) / n + z**2 / (4.0 * n**2)) / (1.0 + z**2 / n)


def mc_ser(
    config: SystemConfig,
    plan: TrainingPlan,
    alloc: PowerAllocation,
    data_power: float,
    trials: int,
    seed: int,
    workers: int = 1,
) -> SerReport:
    """Symbol error rate of the coded data phase after one training round.

    Each trial runs a full training round, then sends one OSTBC block (three
    uniform 64-QAM symbols) at average per-use transmit power ``data_power``
    over the same forward channel with fresh receiver noise.  LR detects with
    its training estimate (and, as a baseline, with the true channel); UR
    detects with its own estimate.  Requires ``n_t == 4`` (the code is a
    four-antenna design).
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials for a meaningful run, got {trials}")
    if config.n_t != 4:
        raise ValueError(f"the data phase uses a 4-antenna block code, got n_t={config.n_t}")
    if data_power <= 0.0:
        raise ValueError(f"data_power must be positive, got {data_power}")
    _check_inputs(config, plan, alloc, plan.scheme)
    core = _core_for(plan.scheme)
    sizes = _chunk_sizes(trials)
    # Unit-energy symbols, 12 units per 4-use codeword: scale^2 * 12 = 4 * P.
    amp = math.sqrt(data_power / 3.0)

    def count_errors(detected: np.ndarray, sent: np.ndarray) -> int:
        return int(np.count_nonzero(np.abs(detected - sent) > 1e-9))

    def one_chunk(i: int):
        gen = RngStream(seed, i).generator
        m = sizes[i]
        out = core(config, plan, alloc, gen, batch=m)
        sym_idx = gen.integers(0, QAM64.size, size=(m, 3))
        s = QAM64[sym_idx]
        x = amp * ostbc_encode(s[:, 0], s[:, 1], s[:, 2])
        y_l = x @ out["h"] + _cn(gen, (m, 4, config.n_l), config.var_w)
        y_u = x @ out["g"] + _cn(gen, (m, 4, config.n_u), config.var_v)
        return (
            count_errors(ostbc_detect(y_l, out["h_lr"], amp), s),
            count_errors(ostbc_detect(y_l, out["h"], amp), s),
            count_errors(ostbc_detect(y_u, out["g_ur"], amp), s),
        )

    parts = _run_chunks(one_chunk, len(sizes), workers)
    err_l = err_lp = err_u = 0
    for a, b, c in parts:
        err_l += a
        err_lp += b
        err_u += c

    n_sym = 3 * trials
    return SerReport(
        trials=trials,
        data_power=data_power,
        ser_l=err_l / n_sym,
        ser_l_ci=_wilson_halfwidth(err_l, n_sym),
        ser_u=err_u / n_sym,
        ser_u_ci=_wilson_halfwidth(err_u, n_sym),
        ser_l_perfect=err_lp / n_sym,
        ser_l_perfect_ci=_wilson_halfwidth(err_lp, n_sym),
    )
