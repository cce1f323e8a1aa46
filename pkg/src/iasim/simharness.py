"""End-to-end downlink simulation: feedback, scheduling, and realized rates.

Four transmission schemes share one pipeline and differ only in the mixing
matrix and receiver:

* ``IA_MMSE`` — rank-reduced mixing (config kappa), MMSE receiver that models
  the strongest interferer spatially and the rest as white residual.
* ``IA_ZF``   — rank-reduced mixing, receiver zero-forces the strongest
  interferer(s) outright and commits to the decoder at feedback time.
* ``MF``      — full-rank mixing (kappa = 1), same MMSE receiver: pure
  multiuser matched filtering, no dimensions sacrificed.
* ``OFDM_REF``— classical OFDMA reference: identity mixing, fully white
  interference model, and one stream per subcarrier block — each block goes
  to the PF-best UE on its dominant eigenmode, with no joint subset search
  and no transmit zero-forcing.

Realized rates always come from the actual received signal model — desired,
intra-cell, and inter-cell powers under the beams every BS really chose —
never from the fed-back estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .netchan import (
    NO_INTERFERER,
    ChannelSet,
    Geometry,
    NetworkConfig,
    drop_users,
    gen_fading,
    geometry_sinr_db,
)
from .precoding import MixingMatrix, PrecoderSet, make_mixing_matrix
from .receiver import (
    canonical_phase,
    equivalent_channel,
    build_feedback,
    final_decoder,
    in_covariance,
    zf_null_decoder,
)
from .scheduler import (
    CandidatePool,
    PfState,
    ScheduleDecision,
    StreamCandidate,
    candidate_from_feedback,
    schedule_exhaustive,
    schedule_greedy,
    update_pf_state,
)

SCHEMES = ("IA_MMSE", "IA_ZF", "MF", "OFDM_REF")


def scheme_mixing(scheme: str, config: NetworkConfig) -> MixingMatrix:
    """The mixing matrix a scheme transmits through."""
    n_dims = config.n_dims
    if scheme in ("IA_MMSE", "IA_ZF"):
        return make_mixing_matrix(n_dims, config.n_freed, config.kappa, config.mixing_family)
    if scheme == "MF":
        return make_mixing_matrix(n_dims, config.n_freed, 1.0, config.mixing_family)
    if scheme == "OFDM_REF":
        return MixingMatrix(
            p=np.eye(n_dims, dtype=complex), kappa=1.0, family="identity", n_freed=0
        )
    raise ValidationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def scheme_kappa(scheme: str, config: NetworkConfig) -> float:
    """The kappa value reported for a scheme's output rows."""
    return config.kappa if scheme in ("IA_MMSE", "IA_ZF") else 1.0


def scheme_streams(scheme: str, config: NetworkConfig) -> int:
    """How many streams a BS transmits per slot under a scheme.

    The joint-scheduled schemes share the configured stream budget; the
    OFDMA reference sends exactly one stream per subcarrier block.
    """
    return config.n_sub if scheme == "OFDM_REF" else config.streams


def feedback_scale(config: NetworkConfig, scheme: str = "IA_MMSE") -> float:
    """Factor turning raw whitened-channel gains into fed-back gains.

    By default the per-stream power split is folded in here so reported gains
    are actual stream SINR estimates; in literal mode the split is applied
    later, inside the rate expression.
    """
    if config.literal_rate_scaling:
        return 1.0
    return config.tx_power / scheme_streams(scheme, config)


def residual_interference(
    geometry: Geometry, config: NetworkConfig, ue: int, excluded: tuple[int, ...]
) -> float:
    """White-equivalent power of all interferers outside `excluded`."""
    if config.inr_rem is not None:
        return config.inr_rem
    gains = geometry.avg_gain[ue]
    keep = gains.sum() - sum(gains[b] for b in excluded)
    return config.tx_power * max(keep, 0.0)


def ue_covariance(
    scheme: str,
    ue: int,
    channels: ChannelSet,
    geometry: Geometry,
    mixing: MixingMatrix,
    config: NetworkConfig,
    prev_eff: dict[int, np.ndarray] | None = None,
) -> np.ndarray:
    """Interference-plus-noise covariance one UE assumes for this scheme."""
    serv = int(geometry.serving_bs[ue])
    strong = int(geometry.strongest_interferer[ue])
    if scheme == "OFDM_REF" or strong == NO_INTERFERER:
        inr = residual_interference(geometry, config, ue, (serv,))
        return in_covariance(
            None, mixing, config.tx_power, config.streams, config.noise_power, inr
        )
    inr = residual_interference(geometry, config, ue, (serv, strong))
    inter_eff = None
    if config.covariance_exact and prev_eff is not None:
        inter_eff = prev_eff.get(strong)
    return in_covariance(
        channels.h[ue, strong], mixing, config.tx_power, config.streams,
        config.noise_power, inr, interferer_effective=inter_eff,
    )


def _nulled_interferers(geometry: Geometry, ue: int, n_null: int) -> list[int]:
    """The UE's n_null strongest non-serving BSs, best first."""
    if n_null <= 0 or geometry.n_bs < 2:
        return []
    serv = int(geometry.serving_bs[ue])
    order = np.argsort(-geometry.avg_gain[ue], kind="stable")
    return [int(b) for b in order if b != serv][:n_null]


def _zf_candidates(
    ue: int,
    channels: ChannelSet,
    geometry: Geometry,
    mixing: MixingMatrix,
    config: NetworkConfig,
) -> list[StreamCandidate]:
    """Null-space receiver candidates: one per interference-free direction."""
    serv = int(geometry.serving_bs[ue])
    h_direct_eff = channels.h[ue, serv] @ mixing.p
    ints = [channels.h[ue, b] @ mixing.p for b in
            _nulled_interferers(geometry, ue, config.n_null)]
    basis = zf_null_decoder(ints, h_direct_eff=h_direct_eff)
    scale = feedback_scale(config)
    out: list[StreamCandidate] = []
    for r in range(min(config.feedback_per_ue, basis.shape[1])):
        u = basis[:, r]
        row = u.conj() @ h_direct_eff
        power = float(np.vdot(row, row).real)
        if power <= 1e-30:
            break
        direction = canonical_phase(row.conj() / math.sqrt(power))
        out.append(StreamCandidate(
            ue=ue, direction=direction, gain=scale * power, rank=r, decoder=u.copy(),
        ))
    return out


def schedule_ofdma(
    pool: CandidatePool, weights: np.ndarray, config: NetworkConfig
) -> ScheduleDecision | None:
    """Classic OFDMA assignment: each subcarrier block to one UE, no ZF.

    Every candidate direction lives in a single subcarrier block of the
    block-diagonal channel; per block the weighted-rate-best candidate is
    served on its own eigenmode at the block's power share.
    """
    m, k = config.n_ant, config.n_sub
    scale = config.tx_power / k if config.literal_rate_scaling else 1.0
    segments = pool.directions.reshape(len(pool.entries), k, m)
    blocks = np.argmax(np.sum(np.abs(segments) ** 2, axis=2), axis=1)

    best: dict[int, tuple[float, float, int]] = {}
    for i, cand in enumerate(pool.entries):
        rate = min(config.rate_cap, math.log2(1.0 + scale * cand.gain))
        util = float(weights[i]) * rate
        b = int(blocks[i])
        if b not in best or util > best[b][0]:
            best[b] = (util, rate, i)
    if not best:
        return None

    order = sorted(best.values(), key=lambda t: t[2])
    chosen = tuple(i for _, _, i in order)
    beams = np.stack([pool.entries[i].direction for i in chosen], axis=1)
    precoders = PrecoderSet(raw=beams, effective=beams)
    return ScheduleDecision(
        chosen=chosen,
        utility=float(sum(u for u, _, _ in order)),
        per_stream_rate=np.array([r for _, r, _ in order]),
        precoders=precoders,
        zf_invocations=0,
        subsets_evaluated=len(pool.entries),
    )


@dataclass(frozen=True)
class StreamRealization:
    """Received-signal accounting for one delivered stream."""

    slot: int
    ue: int
    bs: int
    desired: float           # post-decoder desired power
    intra: float             # same-BS other-stream power
    inter_by_bs: np.ndarray  # (n_bs,) other-BS power, zeros for silent BSs
    noise: float
    sinr: float
    rate: float              # capped bits per channel use


@dataclass
class SlotOutcome:
    delivered: np.ndarray                  # (n_ue,) summed stream rates
    scheduled: np.ndarray                  # (n_ue,) bool
    effective: dict[int, np.ndarray]       # bs -> (n_dims, s) beams actually sent
    zf_invocations: int
    subsets_evaluated: int
    max_stream_rate: float
    realizations: list[StreamRealization] = field(default_factory=list)


def run_slot(
    config: NetworkConfig,
    scheme: str,
    mixing: MixingMatrix,
    geometry: Geometry,
    channels: ChannelSet,
    pf: PfState,
    slot: int = 0,
    scheduler: str = "greedy",
    prev_eff: dict[int, np.ndarray] | None = None,
    record_streams: bool = False,
) -> SlotOutcome:
    """One transmission interval: feedback, per-BS scheduling, realization."""
    n_ue, n_bs = geometry.n_ue, geometry.n_bs
    schedule = schedule_greedy if scheduler == "greedy" else schedule_exhaustive
    scale = feedback_scale(config, scheme)

    phi_cache: dict[int, np.ndarray] = {}
    pools: dict[int, list[StreamCandidate]] = {b: [] for b in range(n_bs)}
    for ue in range(n_ue):
        serv = int(geometry.serving_bs[ue])
        if scheme == "IA_ZF":
            pools[serv].extend(_zf_candidates(ue, channels, geometry, mixing, config))
            continue
        phi = ue_covariance(scheme, ue, channels, geometry, mixing, config, prev_eff)
        phi_cache[ue] = phi
        g = scale * equivalent_channel(phi, channels.h[ue, serv], mixing)
        n_best = min(config.feedback_per_ue, mixing.n_cols)
        for entry in build_feedback(ue, g, n_best):
            pools[serv].append(candidate_from_feedback(entry))

    decisions: dict[int, tuple[CandidatePool, ScheduleDecision]] = {}
    zf_total = 0
    eval_total = 0
    for bs in range(n_bs):
        if not pools[bs]:
            continue
        pool = CandidatePool.build(pools[bs])
        if scheme == "OFDM_REF":
            decision = schedule_ofdma(pool, pf.omega[pool.owners], config)
        else:
            decision = schedule(pool, pf.omega[pool.owners], mixing, config)
        if decision is None or decision.n_streams == 0:
            continue
        decisions[bs] = (pool, decision)
        zf_total += decision.zf_invocations
        eval_total += decision.subsets_evaluated

    effective = {bs: d.precoders.effective for bs, (_, d) in decisions.items()}
    delivered = np.zeros(n_ue)
    scheduled = np.zeros(n_ue, dtype=bool)
    max_rate = 0.0
    realizations: list[StreamRealization] = []
    p_s = config.tx_power / scheme_streams(scheme, config)

    for bs, (pool, decision) in decisions.items():
        entries = [pool.entries[k] for k in decision.chosen]
        v_own = effective[bs]
        for j, ent in enumerate(entries):
            ue = ent.ue
            if ent.decoder is not None:
                u = ent.decoder
            else:
                u = final_decoder(
                    phi_cache[ue], channels.h[ue, bs], mixing,
                    np.asarray(ent.direction)[:, None],
                )[:, 0]
            own_rows = u.conj() @ (channels.h[ue, bs] @ v_own)
            own_pow = p_s * np.abs(own_rows) ** 2
            desired = float(own_pow[j])
            intra = float(own_pow.sum() - own_pow[j])
            inter_by_bs = np.zeros(n_bs)
            for other, v_other in effective.items():
                if other == bs:
                    continue
                rows = u.conj() @ (channels.h[ue, other] @ v_other)
                inter_by_bs[other] = p_s * float(np.vdot(rows, rows).real)
            noise = config.noise_power
            sinr = desired / (intra + inter_by_bs.sum() + noise)
            rate = min(config.rate_cap, math.log2(1.0 + sinr))
            delivered[ue] += rate
            scheduled[ue] = True
            max_rate = max(max_rate, rate)
            if record_streams:
                realizations.append(StreamRealization(
                    slot=slot, ue=ue, bs=bs, desired=desired, intra=intra,
                    inter_by_bs=inter_by_bs, noise=noise, sinr=sinr, rate=rate,
                ))

    return SlotOutcome(
        delivered=delivered, scheduled=scheduled, effective=effective,
        zf_invocations=zf_total, subsets_evaluated=eval_total,
        max_stream_rate=max_rate, realizations=realizations,
    )


@dataclass
class ScenarioResult:
    """One scheme's run over one user drop."""

    scheme: str
    kappa: float
    seed: int
    center_ues: np.ndarray      # recorded UE indices (center-site attached)
    geo_sinr_db: np.ndarray     # their long-term SINRs
    delivered: np.ndarray       # (n_slots, n_center) realized rates
    scheduled_mask: np.ndarray  # (n_slots, n_center)
    zf_invocations: int
    subsets_evaluated: int
    max_stream_rate: float
    n_slots: int
    realizations: list[StreamRealization] = field(default_factory=list)

    @property
    def mean_se(self) -> np.ndarray:
        """Per recorded UE: mean delivered rate per transmission interval."""
        return self.delivered.mean(axis=0)


def run_scenario(
    config: NetworkConfig,
    scheme: str,
    seed: int,
    n_slots: int,
    scheduler: str = "greedy",
    geometry: Geometry | None = None,
    record_streams: bool = False,
) -> ScenarioResult:
    """Drop users once, then simulate n_slots transmission intervals."""
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if geometry is None:
        geometry = drop_users(config, seed)
    mixing = scheme_mixing(scheme, config)
    center = geometry.center_ues()
    pf = PfState.fresh(geometry.n_ue)

    delivered = np.zeros((n_slots, center.size))
    mask = np.zeros((n_slots, center.size), dtype=bool)
    zf_total = 0
    eval_total = 0
    max_rate = 0.0
    realizations: list[StreamRealization] = []
    prev_eff: dict[int, np.ndarray] = {}
    frozen = gen_fading(config, geometry, (seed, 0)) if config.freeze_fading else None

    for t in range(n_slots):
        channels = frozen if frozen is not None else gen_fading(config, geometry, (seed, t))
        outcome = run_slot(
            config, scheme, mixing, geometry, channels, pf, slot=t,
            scheduler=scheduler, prev_eff=prev_eff, record_streams=record_streams,
        )
        delivered[t] = outcome.delivered[center]
        mask[t] = outcome.scheduled[center]
        zf_total += outcome.zf_invocations
        eval_total += outcome.subsets_evaluated
        max_rate = max(max_rate, outcome.max_stream_rate)
        realizations.extend(outcome.realizations)
        prev_eff = outcome.effective
        pf = update_pf_state(pf, outcome.delivered, config.pf_floor)

    geo_all = geometry_sinr_db(geometry, config)
    return ScenarioResult(
        scheme=scheme, kappa=scheme_kappa(scheme, config), seed=seed,
        center_ues=center, geo_sinr_db=geo_all[center], delivered=delivered,
        scheduled_mask=mask, zf_invocations=zf_total, subsets_evaluated=eval_total,
        max_stream_rate=max_rate, n_slots=n_slots, realizations=realizations,
    )


def baseline_mf(
    config: NetworkConfig, geometry: Geometry, channels: ChannelSet,
    scheduler: str = "greedy",
) -> SlotOutcome:
    """Single-slot matched-filter reference on given channels, uniform weights."""
    mixing = scheme_mixing("MF", config)
    return run_slot(config, "MF", mixing, geometry, channels,
                    PfState.fresh(geometry.n_ue), scheduler=scheduler)


def baseline_ofdm(
    config: NetworkConfig, geometry: Geometry, channels: ChannelSet,
    scheduler: str = "greedy",
) -> SlotOutcome:
    """Single-slot interference-blind reference on given channels."""
    mixing = scheme_mixing("OFDM_REF", config)
    return run_slot(config, "OFDM_REF", mixing, geometry, channels,
                    PfState.fresh(geometry.n_ue), scheduler=scheduler)


@dataclass
class SchemeCurve:
    """Spectral efficiency versus long-term SINR for one scheme."""

    scheme: str
    kappa: float
    bin_centers: np.ndarray  # dB
    mean_se: np.ndarray      # bits/s/Hz averaged over UEs in the bin
    n_ue: np.ndarray         # UEs contributing to each bin


@dataclass
class CampaignSummary:
    """Aggregated output of a multi-scenario campaign."""

    curves: list[SchemeCurve]
    cdf_sinr_db: np.ndarray              # sorted recorded-UE SINRs
    cdf: np.ndarray                      # empirical CDF values
    counters: dict[str, dict[str, int]]  # scheme -> search-cost counters
    max_stream_rate: dict[str, float]
    schemes: tuple[str, ...]
    seeds: tuple[int, ...]
    n_slots: int
    bin_width: float

    def curve_for(self, scheme: str) -> SchemeCurve:
        for c in self.curves:
            if c.scheme == scheme:
                return c
        raise KeyError(scheme)


def _bin_curve(
    scheme: str, kappa: float, sinr_db: np.ndarray, se: np.ndarray, width: float
) -> SchemeCurve:
    idx = np.floor(sinr_db / width).astype(int)
    centers = []
    means = []
    counts = []
    for b in np.unique(idx):
        sel = idx == b
        centers.append((b + 0.5) * width)
        means.append(float(se[sel].mean()))
        counts.append(int(sel.sum()))
    return SchemeCurve(
        scheme=scheme, kappa=kappa, bin_centers=np.array(centers),
        mean_se=np.array(means), n_ue=np.array(counts, dtype=int),
    )


def _run_task(args) -> ScenarioResult:
    config, scheme, seed, n_slots, scheduler = args
    return run_scenario(config, scheme, seed, n_slots, scheduler=scheduler)


def run_campaign(
    config: NetworkConfig,
    schemes,
    n_scenarios: int,
    base_seed: int = 0,
    n_slots: int = 100,
    scheduler: str = "greedy",
    jobs: int = 1,
    bin_width: float = 1.0,
) -> CampaignSummary:
    """Monte-Carlo campaign over independent user drops.

    Scenario i uses seed base_seed + i for geometry and fading, so results
    are reproducible and identical whether jobs is 1 or many: tasks are
    aggregated in a fixed order regardless of completion order.
    """
    schemes = tuple(schemes)
    for s in schemes:
        if s not in SCHEMES:
            raise ValidationError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
    seeds = tuple(base_seed + i for i in range(n_scenarios))
    tasks = [(config, scheme, seed, n_slots, scheduler)
             for scheme in schemes for seed in seeds]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    curves = []
    counters: dict[str, dict[str, int]] = {}
    max_rate: dict[str, float] = {}
    per_scheme = len(seeds)
    for si, scheme in enumerate(schemes):
        chunk = results[si * per_scheme:(si + 1) * per_scheme]
        sinr = np.concatenate([r.geo_sinr_db for r in chunk])
        se = np.concatenate([r.mean_se for r in chunk])
        curves.append(_bin_curve(scheme, scheme_kappa(scheme, config), sinr, se, bin_width))
        counters[scheme] = {
            "zf_invocations": sum(r.zf_invocations for r in chunk),
            "subsets_evaluated": sum(r.subsets_evaluated for r in chunk),
        }
        max_rate[scheme] = max((r.max_stream_rate for r in chunk), default=0.0)

    first = results[:per_scheme]
    all_sinr = np.sort(np.concatenate([r.geo_sinr_db for r in first]))
    cdf = np.arange(1, all_sinr.size + 1) / all_sinr.size

    return CampaignSummary(
        curves=curves, cdf_sinr_db=all_sinr, cdf=cdf, counters=counters,
        max_stream_rate=max_rate, schemes=schemes, seeds=seeds,
        n_slots=n_slots, bin_width=bin_width,
    )
