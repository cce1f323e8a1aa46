"""Network geometry, path loss, and correlated block-diagonal MIMO-OFDM fading.

Everything here is a pure function of (config, seed): RNG streams are derived
from labeled SeedSequence keys so serial and parallel runs draw identical
values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .exceptions import ValidationError

NO_INTERFERER = -1

# SeedSequence stream labels, one per purpose.
_STREAM_GEOMETRY = 1
_STREAM_FADING = 2

# 3GPP-style parabolic sector mask parameters (used only when sector masks
# are enabled).
_SECTOR_BEAMWIDTH_DEG = 70.0
_SECTOR_BACKLOBE_DB = 20.0


def rng_stream(*key: int) -> np.random.Generator:
    """Independent generator for a labeled stream of integers."""
    return np.random.default_rng(np.random.SeedSequence(list(key)))


@dataclass(frozen=True)
class NetworkConfig:
    """Scalar parameters of the downlink system model.

    Power quantities are linear. The propagation defaults (inter-site
    distance, log-distance exponent, shadowing) are stand-ins: the source
    system's propagation model is external, so only their qualitative
    behavior matters.
    """

    n_cells: int = 7                 # sites in the hexagonal layout (B)
    sectors_per_cell: int = 1        # >1 co-locates sector BSs per site
    n_ues_per_cell: int = 10         # UEs dropped per cell (N_u)
    n_ant: int = 4                   # antennas per node (M)
    n_sub: int = 1                   # OFDM subcarriers (K)
    n_freed: int = 1                 # freed dimensions per BS (N_f)
    kappa: float = 0.0               # trailing-column weight of the mixing matrix
    tx_power: float = 1.0            # total BS transmit power (p)
    noise_power: float = 1e-6        # receiver noise power (sigma^2)
    corr_coeff: float = 0.0          # antenna correlation coefficient (rho)
    n_feedback: int | None = None    # directions fed back per UE (L); None -> n_dims - n_freed
    pf_floor: float = 0.5            # proportional-fair rate floor r_min, bits/use
    rate_cap: float = 8.0            # per-stream rate truncation, bits/use
    inr_rem: float | None = None     # residual-interference override; None -> from geometry
    n_null: int = 1                  # interferers nulled by the ZF receiver (N_ri)
    n_streams: int | None = None     # streams per BS (S); None -> n_dims - n_freed
    mixing_family: str = "fourier"   # "fourier" or "hadamard"

    # Propagation stand-in (log-distance + log-normal shadowing).
    isd: float = 500.0               # inter-site distance, meters
    pl_exponent: float = 3.5         # path-loss exponent
    pl_ref_distance: float = 50.0    # reference distance d0, meters
    pl_ref_gain: float = 1.0         # linear gain at d0
    shadowing_sigma_db: float = 8.0  # shadowing std dev in dB; 0 disables
    sector_masks: bool = False       # 3-lobe pattern when sectors_per_cell > 1
    poisson_users: bool = False      # Poisson per-cell counts instead of exactly N_u

    # Algorithm switches.
    cross_gain_squared: bool = True     # cross gain |<c,v>|^2 (power) vs |<c,v>| (amplitude)
    literal_rate_scaling: bool = False  # keep the extra p/S factor inside the rate log
    covariance_exact: bool = False      # previous-slot interferer precoders in Phi
    per_ue_stream_cap: int | None = None  # max co-scheduled streams per UE
    freeze_fading: bool = False         # one fading draw per scenario

    def __post_init__(self) -> None:
        self.validate()

    @property
    def n_dims(self) -> int:
        """Total signal dimensions M_K = M * K."""
        return self.n_ant * self.n_sub

    @property
    def reduced_dims(self) -> int:
        """Columns of the mixing matrix: M_K - N_f if kappa=0, else M_K."""
        return self.n_dims if self.kappa > 0.0 else self.n_dims - self.n_freed

    @property
    def streams(self) -> int:
        """Streams a BS may serve per slot (S)."""
        return self.n_streams if self.n_streams is not None else self.n_dims - self.n_freed

    @property
    def feedback_per_ue(self) -> int:
        """Directions each UE feeds back (L)."""
        return self.n_feedback if self.n_feedback is not None else self.n_dims - self.n_freed

    def validate(self) -> None:
        if self.n_cells < 1 or self.n_cells > 19:
            raise ValidationError(f"n_cells must be in 1..19, got {self.n_cells}")
        if self.sectors_per_cell < 1:
            raise ValidationError("sectors_per_cell must be >= 1")
        if self.n_ues_per_cell < 1:
            raise ValidationError("n_ues_per_cell must be >= 1")
        if self.n_ant < 1 or self.n_sub < 1:
            raise ValidationError("n_ant and n_sub must be >= 1")
        if not 0 <= self.n_freed < self.n_dims:
            raise ValidationError(
                f"n_freed must satisfy 0 <= n_freed < n_dims, got {self.n_freed} with n_dims={self.n_dims}"
            )
        if not 0.0 <= self.kappa <= 1.0:
            raise ValidationError(f"kappa must be in [0, 1], got {self.kappa}")
        if self.tx_power <= 0.0:
            raise ValidationError("tx_power must be > 0")
        if self.noise_power <= 0.0:
            raise ValidationError("noise_power must be > 0")
        if not 0.0 <= self.corr_coeff < 1.0:
            raise ValidationError(f"corr_coeff must be in [0, 1), got {self.corr_coeff}")
        if self.rate_cap <= 0.0:
            raise ValidationError("rate_cap must be > 0")
        if self.pf_floor <= 0.0:
            raise ValidationError("pf_floor must be > 0")
        if not 1 <= self.feedback_per_ue <= self.reduced_dims:
            raise ValidationError(
                f"n_feedback must be in 1..{self.reduced_dims}, got {self.feedback_per_ue}"
            )
        if not 1 <= self.streams <= self.reduced_dims:
            raise ValidationError(f"n_streams must be in 1..{self.reduced_dims}, got {self.streams}")
        if self.n_null < 0:
            raise ValidationError("n_null must be >= 0")
        if self.inr_rem is not None and self.inr_rem < 0.0:
            raise ValidationError("inr_rem must be >= 0")
        if self.mixing_family not in ("fourier", "hadamard"):
            raise ValidationError(f"unknown mixing_family {self.mixing_family!r}")
        if self.isd <= 0.0 or self.pl_ref_distance <= 0.0 or self.pl_ref_gain <= 0.0:
            raise ValidationError("isd, pl_ref_distance and pl_ref_gain must be > 0")
        if self.pl_exponent <= 0.0:
            raise ValidationError("pl_exponent must be > 0")
        if self.shadowing_sigma_db < 0.0:
            raise ValidationError("shadowing_sigma_db must be >= 0")
        if self.per_ue_stream_cap is not None and self.per_ue_stream_cap < 1:
            raise ValidationError("per_ue_stream_cap must be >= 1")

    def scalar_fields(self) -> dict:
        """Flat dict of all fields, round-trippable through the config file."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss; distances at or below the reference clamp to it."""

    exponent: float = 3.5
    ref_distance: float = 50.0
    ref_gain: float = 1.0

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "PathLossModel":
        return cls(
            exponent=config.pl_exponent,
            ref_distance=config.pl_ref_distance,
            ref_gain=config.pl_ref_gain,
        )


def path_gain(distance_m: float, model: PathLossModel, shadow_db: float = 0.0) -> float:
    """Linear average gain at a distance, optionally shifted by shadowing in dB."""
    d = max(float(distance_m), model.ref_distance)
    gain = model.ref_gain * (d / model.ref_distance) ** (-model.exponent)
    if shadow_db != 0.0:
        gain *= 10.0 ** (shadow_db / 10.0)
    return gain


@dataclass(frozen=True)
class Geometry:
    """One drop: positions, average gains, and the association they induce."""

    bs_xy: np.ndarray                 # (n_bs, 2)
    ue_xy: np.ndarray                 # (n_ue, 2)
    site_of_bs: np.ndarray            # (n_bs,) site index of each BS
    cell_of_ue: np.ndarray            # (n_ue,) site whose hexagon the UE was dropped in
    avg_gain: np.ndarray              # (n_ue, n_bs) linear average power gain
    serving_bs: np.ndarray            # (n_ue,) argmax of avg_gain
    strongest_interferer: np.ndarray  # (n_ue,) best non-serving BS, NO_INTERFERER if none

    @property
    def n_ue(self) -> int:
        return self.ue_xy.shape[0]

    @property
    def n_bs(self) -> int:
        return self.bs_xy.shape[0]

    def ues_of_bs(self, bs: int) -> np.ndarray:
        return np.flatnonzero(self.serving_bs == bs)

    def center_ues(self) -> np.ndarray:
        """UEs served by a BS of the center site."""
        return np.flatnonzero(self.site_of_bs[self.serving_bs] == 0)


def site_positions(n_cells: int, isd: float) -> np.ndarray:
    """Center + up to two hexagonal rings, truncated to n_cells sites."""
    pos = [(0.0, 0.0)]
    for k in range(6):
        a = math.radians(60.0 * k)
        pos.append((isd * math.cos(a), isd * math.sin(a)))
    for k in range(6):
        a = math.radians(60.0 * k + 30.0)
        pos.append((math.sqrt(3.0) * isd * math.cos(a), math.sqrt(3.0) * isd * math.sin(a)))
    for k in range(6):
        a = math.radians(60.0 * k)
        pos.append((2.0 * isd * math.cos(a), 2.0 * isd * math.sin(a)))
    return np.asarray(pos[:n_cells], dtype=float)


def _in_hexagon(x: float, y: float, apothem: float) -> bool:
    # Hexagon tiling the grid: edges perpendicular to the 0/60/120 degree axes.
    for ang in (0.0, 60.0, 120.0):
        a = math.radians(ang)
        if abs(x * math.cos(a) + y * math.sin(a)) > apothem:
            return False
    return True


def _draw_in_hexagon(rng: np.random.Generator, apothem: float) -> tuple[float, float]:
    r = apothem * 2.0 / math.sqrt(3.0)  # circumradius
    while True:
        x = rng.uniform(-r, r)
        y = rng.uniform(-r, r)
        if _in_hexagon(x, y, apothem):
            return x, y


def _sector_mask_db(angle_rad: np.ndarray) -> np.ndarray:
    """Parabolic 120-degree sector pattern, bounded backlobe."""
    deg = np.degrees(np.arctan2(np.sin(angle_rad), np.cos(angle_rad)))
    return -np.minimum(12.0 * (deg / _SECTOR_BEAMWIDTH_DEG) ** 2, _SECTOR_BACKLOBE_DB)


def drop_users(config: NetworkConfig, rng_seed: int) -> Geometry:
    """Place BSs on the hex grid, drop UEs uniformly per cell, fill gains.

    Shadowing is drawn once per UE-BS link. Serving and strongest-interferer
    BSs are chosen on average gain, so they are stable across fading draws.
    """
    rng = rng_stream(rng_seed, _STREAM_GEOMETRY)
    sites = site_positions(config.n_cells, config.isd)
    n_sites = sites.shape[0]
    s_per = config.sectors_per_cell

    bs_xy = np.repeat(sites, s_per, axis=0)
    site_of_bs = np.repeat(np.arange(n_sites), s_per)
    n_bs = bs_xy.shape[0]

    apothem = config.isd / 2.0
    ue_xy = []
    cell_of_ue = []
    for site in range(n_sites):
        count = config.n_ues_per_cell
        if config.poisson_users:
            count = max(1, int(rng.poisson(config.n_ues_per_cell)))
        for _ in range(count):
            x, y = _draw_in_hexagon(rng, apothem)
            ue_xy.append((sites[site, 0] + x, sites[site, 1] + y))
            cell_of_ue.append(site)
    ue_xy = np.asarray(ue_xy, dtype=float)
    cell_of_ue = np.asarray(cell_of_ue, dtype=int)
    n_ue = ue_xy.shape[0]

    model = PathLossModel.from_config(config)
    delta = ue_xy[:, None, :] - bs_xy[None, :, :]
    dist = np.hypot(delta[:, :, 0], delta[:, :, 1])

    shadow_db = np.zeros((n_ue, n_bs))
    if config.shadowing_sigma_db > 0.0:
        shadow_db = rng.normal(0.0, config.shadowing_sigma_db, size=(n_ue, n_bs))

    d_eff = np.maximum(dist, model.ref_distance)
    gain = model.ref_gain * (d_eff / model.ref_distance) ** (-model.exponent)
    gain = gain * 10.0 ** (shadow_db / 10.0)

    if s_per > 1 and config.sector_masks:
        boresight = np.radians(90.0 + 120.0 * (np.arange(n_bs) % s_per))
        angle = np.arctan2(delta[:, :, 1], delta[:, :, 0]) - boresight[None, :]
        gain = gain * 10.0 ** (_sector_mask_db(angle) / 10.0)

    serving = np.argmax(gain, axis=1)
    if n_bs > 1:
        masked = gain.copy()
        masked[np.arange(n_ue), serving] = -np.inf
        strongest = np.argmax(masked, axis=1)
    else:
        strongest = np.full(n_ue, NO_INTERFERER, dtype=int)

    return Geometry(
        bs_xy=bs_xy,
        ue_xy=ue_xy,
        site_of_bs=site_of_bs,
        cell_of_ue=cell_of_ue,
        avg_gain=gain,
        serving_bs=serving,
        strongest_interferer=strongest,
    )


@dataclass(frozen=True)
class ChannelSet:
    """Per-(UE, BS) block-diagonal effective channels.

    h has shape (n_ue, n_bs, M_K, M_K) with K independent M x M fading blocks
    on the diagonal; off-block entries are exactly zero.
    """

    h: np.ndarray
    n_ant: int
    n_sub: int


def correlation_root(n_ant: int, rho: float) -> np.ndarray:
    """Symmetric PSD square root of the exponential correlation matrix rho^|i-j|."""
    idx = np.arange(n_ant)
    corr = rho ** np.abs(idx[:, None] - idx[None, :])
    w, v = np.linalg.eigh(corr)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.T


def gen_fading(
    config: NetworkConfig, geometry: Geometry, rng_seed: int | tuple[int, ...]
) -> ChannelSet:
    """Draw one fading realization for every UE-BS link.

    Each M x M block is R^(1/2) W R^(1/2) with W i.i.d. unit-variance complex
    Gaussian and R the exponential correlation matrix (same coefficient at
    both link ends), scaled so E||block||_F^2 = M^2 * avg_gain.
    """
    key = rng_seed if isinstance(rng_seed, tuple) else (rng_seed,)
    rng = rng_stream(*key, _STREAM_FADING)

    m, k = config.n_ant, config.n_sub
    n_ue, n_bs = geometry.n_ue, geometry.n_bs
    shape = (n_ue, n_bs, k, m, m)
    w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)

    if config.corr_coeff > 0.0:
        root = correlation_root(m, config.corr_coeff)
        w = np.einsum("ij,ubkjl,lm->ubkim", root, w, root, optimize=True)

    scale = np.sqrt(geometry.avg_gain)[:, :, None, None, None]
    blocks = w * scale

    n_dims = m * k
    h = np.zeros((n_ue, n_bs, n_dims, n_dims), dtype=complex)
    for sub in range(k):
        sl = slice(sub * m, (sub + 1) * m)
        h[:, :, sl, sl] = blocks[:, :, sub]
    return ChannelSet(h=h, n_ant=m, n_sub=k)


def geometry_sinr_db(geometry: Geometry, config: NetworkConfig) -> np.ndarray:
    """Long-term average SINR per UE from path gains only, in dB."""
    p = config.tx_power
    g_serv = geometry.avg_gain[np.arange(geometry.n_ue), geometry.serving_bs]
    g_total = geometry.avg_gain.sum(axis=1)
    interf = p * (g_total - g_serv)
    return 10.0 * np.log10(p * g_serv / (config.noise_power + interf))
