"""Joint user/stream selection per BS with proportional-fair weighting.

Each BS owns a pool of fed-back (direction, gain) candidates from its attached
UEs and picks the subset maximizing the weighted sum of capped stream rates
under zero-forcing. Two searches are provided: exhaustive over all subset
sizes up to S, and a greedy grow-one-stream-at-a-time pass. Both defer bulk
utility evaluation to the kernel backend and only expand the winning subset
into actual beamformers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from . import _kernels
from .exceptions import BudgetExceededError, IllConditionedError
from .netchan import NetworkConfig
from .precoding import MixingMatrix, PrecoderSet, precoder_cross_gain, zf_beamform
from .receiver import FeedbackEntry


@dataclass(frozen=True)
class StreamCandidate:
    """One schedulable stream: a fed-back direction plus its origin."""

    ue: int                        # global UE index of the owner
    direction: np.ndarray          # (n_cols,) unit direction
    gain: float                    # reported power gain along the direction
    rank: int                      # feedback rank at the owner (0 = strongest)
    decoder: np.ndarray | None = None  # receive vector committed at feedback time


def candidate_from_feedback(entry: FeedbackEntry, decoder=None) -> StreamCandidate:
    return StreamCandidate(
        ue=entry.ue, direction=entry.direction, gain=entry.gain,
        rank=entry.rank, decoder=decoder,
    )


@dataclass(frozen=True)
class CandidatePool:
    """Array view over one BS's candidates for kernel evaluation."""

    entries: tuple[StreamCandidate, ...]
    directions: np.ndarray  # (n, n_cols)
    gains: np.ndarray       # (n,)
    owners: np.ndarray      # (n,) UE index per entry

    @classmethod
    def build(cls, candidates) -> "CandidatePool":
        entries = tuple(candidates)
        if entries:
            directions = np.stack([np.asarray(c.direction) for c in entries]).astype(complex)
            gains = np.array([c.gain for c in entries], dtype=float)
            owners = np.array([c.ue for c in entries], dtype=int)
        else:
            directions = np.empty((0, 0), dtype=complex)
            gains = np.empty(0)
            owners = np.empty(0, dtype=int)
        return cls(entries=entries, directions=directions, gains=gains, owners=owners)

    @property
    def size(self) -> int:
        return len(self.entries)

    @cached_property
    def gram(self) -> np.ndarray:
        """Hermitian Gram matrix of the candidate directions."""
        return self.directions.conj() @ self.directions.T


@dataclass(frozen=True)
class PfState:
    """Running per-UE average rates and the weights they induce."""

    avg_rate: np.ndarray  # (n_ue,) mean delivered rate over elapsed slots
    omega: np.ndarray     # (n_ue,) scheduling weight in [0, 1]
    n_slots: int          # slots absorbed so far

    @classmethod
    def fresh(cls, n_ue: int) -> "PfState":
        return cls(avg_rate=np.zeros(n_ue), omega=np.ones(n_ue), n_slots=0)


def update_pf_state(state: PfState, delivered: np.ndarray, r_min: float) -> PfState:
    """Fold one slot of delivered rates (zeros for idle UEs) into the average.

    The weight is r_min / max(r_min, avg), exactly 1 while a UE's average sits
    at or below the floor and decaying as it gets served beyond it.
    """
    t = state.n_slots + 1
    avg = state.avg_rate + (np.asarray(delivered, dtype=float) - state.avg_rate) / t
    omega = r_min / np.maximum(r_min, avg)
    return PfState(avg_rate=avg, omega=omega, n_slots=t)


def rate_scale(config: NetworkConfig) -> float:
    """Factor applied to reported gains inside the rate log."""
    return config.tx_power / config.streams if config.literal_rate_scaling else 1.0


def stream_rate(gain: float, cross: float, config: NetworkConfig) -> float:
    """Capped rate of one stream given its reported gain and beam overlap."""
    return min(config.rate_cap, math.log2(1.0 + rate_scale(config) * gain * cross))


@dataclass(frozen=True)
class ScheduleDecision:
    """Winning subset of one BS's pool for one slot."""

    chosen: tuple[int, ...]      # pool indices, ascending
    utility: float               # weighted sum rate as scored by the kernel
    per_stream_rate: np.ndarray  # unweighted capped rates, aligned with chosen
    precoders: PrecoderSet       # beamformers for the chosen directions
    zf_invocations: int          # beamforming solves spent searching
    subsets_evaluated: int       # candidate subsets scored

    @property
    def n_streams(self) -> int:
        return len(self.chosen)


def evaluate_subset(
    subset, pool: CandidatePool, weights: np.ndarray,
    mixing: MixingMatrix, config: NetworkConfig,
) -> tuple[float, PrecoderSet | None, np.ndarray]:
    """Direct (non-kernel) evaluation: beamformers, per-stream rates, utility."""
    idx = list(subset)
    try:
        pre = zf_beamform(pool.directions[idx].conj(), mixing)
    except IllConditionedError:
        return -np.inf, None, np.zeros(len(idx))
    rates = np.empty(len(idx))
    utility = 0.0
    for j, k in enumerate(idx):
        cross = precoder_cross_gain(
            pool.directions[k], pre.raw[:, j], squared=config.cross_gain_squared
        )
        rates[j] = stream_rate(pool.gains[k], cross, config)
        utility += weights[k] * rates[j]
    return utility, pre, rates


def _kernel_args(config: NetworkConfig) -> dict:
    return {
        "rate_cap": config.rate_cap,
        "sinr_scale": rate_scale(config),
        "cross_power": 1.0 if config.cross_gain_squared else 0.5,
    }


def _respects_cap(subset, owners: np.ndarray, cap: int | None) -> bool:
    if cap is None:
        return True
    counts: dict[int, int] = {}
    for k in subset:
        o = int(owners[k])
        counts[o] = counts.get(o, 0) + 1
        if counts[o] > cap:
            return False
    return True


def _finalize(
    subset, utility, pool, weights, mixing, config, n_zf, n_eval
) -> ScheduleDecision:
    chosen = tuple(sorted(int(k) for k in subset))
    _, pre, rates = evaluate_subset(chosen, pool, weights, mixing, config)
    return ScheduleDecision(
        chosen=chosen, utility=float(utility), per_stream_rate=rates,
        precoders=pre, zf_invocations=n_zf, subsets_evaluated=n_eval,
    )


def schedule_exhaustive(
    pool: CandidatePool, weights: np.ndarray, mixing: MixingMatrix,
    config: NetworkConfig, max_subsets: int = 2_000_000,
) -> ScheduleDecision | None:
    """Scan every subset of size 1..S; ties resolve to the smallest, earliest.

    Raises BudgetExceededError before evaluating anything if the subset count
    would exceed max_subsets.
    """
    n = pool.size
    if n == 0:
        return None
    s_max = min(config.streams, n)
    total = sum(math.comb(n, k) for k in range(1, s_max + 1))
    if total > max_subsets:
        raise BudgetExceededError(
            f"{total} subsets exceed the exhaustive-search budget of {max_subsets}"
        )

    kern = _kernel_args(config)
    cap = config.per_ue_stream_cap
    best_util = -np.inf
    best_subset: tuple[int, ...] | None = None
    n_eval = 0
    for size in range(1, s_max + 1):
        rows = [
            c for c in combinations(range(n), size)
            if _respects_cap(c, pool.owners, cap)
        ]
        if not rows:
            continue
        utils = _kernels.subset_utilities(
            pool.gram, pool.gains, weights, np.asarray(rows, dtype=np.int64), **kern
        )
        n_eval += len(rows)
        j = int(np.argmax(utils))
        if utils[j] > best_util:
            best_util = float(utils[j])
            best_subset = rows[j]
    if best_subset is None:
        return None
    return _finalize(best_subset, best_util, pool, weights, mixing, config, n_eval, n_eval)


def schedule_greedy(
    pool: CandidatePool, weights: np.ndarray, mixing: MixingMatrix,
    config: NetworkConfig,
) -> ScheduleDecision | None:
    """Grow the stream set one candidate at a time, stopping on no improvement.

    Seeds with the best singleton, then repeatedly batches every one-entry
    extension of the current set and keeps the best only if it strictly
    improves the weighted sum rate.
    """
    n = pool.size
    if n == 0:
        return None
    kern = _kernel_args(config)
    cap = config.per_ue_stream_cap
    s_max = min(config.streams, n)

    singles = np.arange(n, dtype=np.int64)[:, None]
    utils = _kernels.subset_utilities(pool.gram, pool.gains, weights, singles, **kern)
    n_eval = n
    seed = int(np.argmax(utils))
    current = [seed]
    current_util = float(utils[seed])

    while len(current) < s_max:
        ext = [
            current + [j] for j in range(n)
            if j not in current and _respects_cap(current + [j], pool.owners, cap)
        ]
        if not ext:
            break
        utils = _kernels.subset_utilities(
            pool.gram, pool.gains, weights, np.asarray(ext, dtype=np.int64), **kern
        )
        n_eval += len(ext)
        j = int(np.argmax(utils))
        if utils[j] > current_util:
            current = ext[j]
            current_util = float(utils[j])
        else:
            break

    return _finalize(current, current_util, pool, weights, mixing, config, n_eval, n_eval)
