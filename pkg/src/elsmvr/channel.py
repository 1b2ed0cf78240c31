"""Propagation and link-capacity models.

UAV -> SBS content links are mmWave with log-normal shadowing, SBS -> UAV
tracking links are sub-6 GHz; both average their LoS/NLoS loss with the
air-to-ground elevation-angle LoS probability. SBS <-> user links are
interference-limited sub-6 GHz links with distance loss and Rayleigh fading.

Scalar functions operate on :class:`Node` objects; the ``*_matrix`` helpers
evaluate the same formulas over whole position arrays for the simulator.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .units import SPEED_OF_LIGHT, dbm_to_watts


class NodeKind(enum.Enum):
    UAV = "uav"
    SBS = "sbs"
    USER = "user"


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    position: tuple[float, float, float]

    def __post_init__(self):
        if len(self.position) != 3:
            raise ConfigurationError("position must be (x, y, z)")
        if self.position[2] < 0:
            raise ConfigurationError(f"node {self.id}: negative height")

    @property
    def height(self) -> float:
        return self.position[2]


@dataclass(frozen=True)
class RadioParams:
    carrier_freq_hz: float = 38e9
    ref_distance_m: float = 5.0
    pl_exp_los: float = 2.0
    pl_exp_nlos: float = 2.4
    shadow_sigma_los_db: float = 5.3
    shadow_sigma_nlos_db: float = 5.27
    sub6_pl_exp: float = 2.0
    sub6_nlos_atten: float = 100.0
    env_x: float = 11.9
    env_y: float = 0.13
    noise_power_dbm: float = -105.0
    tx_power_uav_dbm: float = 20.0
    tx_power_sbs_dbm: float = 30.0
    tx_power_user_dbm: float = 20.0

    def __post_init__(self):
        powers = (self.noise_power_dbm, self.tx_power_uav_dbm,
                  self.tx_power_sbs_dbm, self.tx_power_user_dbm)
        if not all(math.isfinite(p) for p in powers):
            raise ConfigurationError("powers must be finite")
        if self.carrier_freq_hz <= 0 or self.ref_distance_m <= 0:
            raise ConfigurationError("carrier frequency and reference distance must be positive")
        if self.pl_exp_los > self.pl_exp_nlos:
            raise ConfigurationError("LoS exponent must not exceed NLoS exponent")
        if self.sub6_nlos_atten < 1:
            raise ConfigurationError("NLoS excess attenuation must be >= 1")
        if self.env_x <= 0 or self.env_y <= 0:
            raise ConfigurationError("environment constants X, Y must be positive")
        if self.shadow_sigma_los_db < 0 or self.shadow_sigma_nlos_db < 0:
            raise ConfigurationError("shadowing deviations must be non-negative")

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_power_dbm)


@dataclass(frozen=True)
class Bandwidths:
    backhaul_down_hz: float = 2e9
    backhaul_up_hz: float = 500e6
    access_down_hz: float = 16e6
    access_up_hz: float = 4e6

    def __post_init__(self):
        for name in ("backhaul_down_hz", "backhaul_up_hz", "access_down_hz", "access_up_hz"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass(frozen=True)
class LinkBudget:
    avg_path_loss_db: float
    avg_snr_linear: float
    capacity_bps_per_user: float


def free_space_loss(params: RadioParams) -> float:
    """Free-space loss at the reference distance, in dB."""
    ratio = params.ref_distance_m * params.carrier_freq_hz * 4.0 * math.pi / SPEED_OF_LIGHT
    return 20.0 * math.log10(ratio)


def mmwave_path_loss(params: RadioParams, distance_m: float, los: bool,
                     shadow_sample_db: float = 0.0) -> float:
    if distance_m < params.ref_distance_m:
        raise DomainError(f"distance {distance_m} m below reference distance {params.ref_distance_m} m")
    mu = params.pl_exp_los if los else params.pl_exp_nlos
    return free_space_loss(params) + 10.0 * mu * math.log10(distance_m) + shadow_sample_db


def sample_mmwave_path_loss(params: RadioParams, distance_m: float, los: bool,
                            rng: np.random.Generator, size: int | None = None):
    """Path loss with a log-normal shadowing draw (used to check the zero-mean expectation)."""
    sigma = params.shadow_sigma_los_db if los else params.shadow_sigma_nlos_db
    base = mmwave_path_loss(params, distance_m, los)
    return base + rng.normal(0.0, sigma, size=size)


def _distance(a: Node, b: Node) -> float:
    return math.dist(a.position, b.position)


def elevation_deg(uav: Node, ground: Node) -> float:
    d = _distance(uav, ground)
    if d == 0.0:
        raise DomainError("coincident nodes")
    dh = uav.height - ground.height
    return math.degrees(math.asin(max(-1.0, min(1.0, dh / d))))


def los_probability_from_angle(params: RadioParams, elevation: float) -> float:
    return 1.0 / (1.0 + params.env_x * math.exp(-params.env_y * (elevation - params.env_x)))


def los_probability(params: RadioParams, uav: Node, ground: Node) -> float:
    """LoS probability from the elevation angle, in degrees, over the slant range."""
    return los_probability_from_angle(params, elevation_deg(uav, ground))


def average_path_loss(params: RadioParams, uav: Node, ground: Node) -> float:
    """Expected mmWave loss in dB (shadowing at its zero mean)."""
    p = los_probability(params, uav, ground)
    d = _distance(uav, ground)
    return p * mmwave_path_loss(params, d, True) + (1.0 - p) * mmwave_path_loss(params, d, False)


def sub6_average_path_loss(params: RadioParams, uav: Node, ground: Node) -> float:
    """Expected sub-6 GHz loss in dB; NLoS adds the excess attenuation ``eta``."""
    p = los_probability(params, uav, ground)
    d = _distance(uav, ground)
    los_db = 10.0 * params.sub6_pl_exp * math.log10(d)
    nlos_db = los_db + 10.0 * math.log10(params.sub6_nlos_atten)
    return p * los_db + (1.0 - p) * nlos_db


def snr_from_loss(tx_power_dbm: float, loss_db: float, params: RadioParams) -> float:
    return dbm_to_watts(tx_power_dbm) / (10.0 ** (loss_db / 10.0) * params.noise_w)


def shannon_per_user(bandwidth_hz: float, users: int, snr: float) -> float:
    return bandwidth_hz / users * math.log2(1.0 + snr)


def backhaul_budgets(params: RadioParams, bw: Bandwidths, uav: Node, sbs: Node,
                     users_at_sbs: int) -> tuple[LinkBudget, LinkBudget]:
    """Downlink (mmWave) and uplink (sub-6 GHz) budgets per associated user."""
    if users_at_sbs < 1:
        raise DomainError("per-user backhaul capacity needs at least one associated user")
    down_loss = average_path_loss(params, uav, sbs)
    down_snr = snr_from_loss(params.tx_power_uav_dbm, down_loss, params)
    up_loss = sub6_average_path_loss(params, uav, sbs)
    up_snr = snr_from_loss(params.tx_power_sbs_dbm, up_loss, params)
    return (
        LinkBudget(down_loss, down_snr, shannon_per_user(bw.backhaul_down_hz, users_at_sbs, down_snr)),
        LinkBudget(up_loss, up_snr, shannon_per_user(bw.backhaul_up_hz, users_at_sbs, up_snr)),
    )


def backhaul_capacity_per_user(params: RadioParams, bw: Bandwidths, uav: Node, sbs: Node,
                               users_at_sbs: int) -> tuple[float, float]:
    down, up = backhaul_budgets(params, bw, uav, sbs, users_at_sbs)
    return down.capacity_bps_per_user, up.capacity_bps_per_user


class ChannelGainModel:
    """Linear SBS-user power gains ``h[(user_id, sbs_id)]``."""

    def __init__(self, gains: Mapping[tuple[int, int], float]):
        self._gains = dict(gains)

    def __call__(self, user_id: int, sbs_id: int) -> float:
        try:
            return self._gains[(user_id, sbs_id)]
        except KeyError:
            raise ConfigurationError(f"no channel gain for user {user_id}, SBS {sbs_id}") from None

    def items(self):
        return self._gains.items()

    @classmethod
    def constant(cls, users: Sequence[Node], sbss: Sequence[Node], value: float) -> ChannelGainModel:
        return cls({(u.id, s.id): value for u in users for s in sbss})

    @classmethod
    def rayleigh(cls, params: RadioParams, users: Sequence[Node], sbss: Sequence[Node],
                 rng: np.random.Generator, fading: bool = True) -> ChannelGainModel:
        """Distance loss ``d**-beta`` times unit-mean exponential (Rayleigh power) fading."""
        gains = {}
        for u in users:
            for s in sbss:
                g = max(_distance(u, s), 1.0) ** (-params.sub6_pl_exp)
                if fading:
                    g *= rng.exponential(1.0)
                gains[(u.id, s.id)] = g
        return cls(gains)


def access_capacity(params: RadioParams, bw: Bandwidths, sbs: Node, user: Node,
                    all_sbs: Sequence[Node], all_users: Sequence[Node],
                    gains: ChannelGainModel, users_at_sbs: int) -> tuple[float, float]:
    """Per-user SBS->user and user->SBS capacities.

    Downlink interference comes from every other SBS at full power; uplink
    interference from every other user towards this SBS.
    """
    if users_at_sbs < 1:
        raise DomainError("user must be associated to the SBS")
    noise = params.noise_w
    p_b = dbm_to_watts(params.tx_power_sbs_dbm)
    p_u = dbm_to_watts(params.tx_power_user_dbm)
    interf_down = sum(p_b * gains(user.id, n.id) for n in all_sbs if n.id != sbs.id)
    sinr_down = p_b * gains(user.id, sbs.id) / (interf_down + noise)
    interf_up = sum(p_u * gains(n.id, sbs.id) for n in all_users if n.id != user.id)
    sinr_up = p_u * gains(user.id, sbs.id) / (interf_up + noise)
    return (shannon_per_user(bw.access_down_hz, users_at_sbs, sinr_down),
            shannon_per_user(bw.access_up_hz, users_at_sbs, sinr_up))


# -- array forms used by the simulator ---------------------------------------

def pairwise_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def backhaul_snr_matrix(params: RadioParams, uav_pos: np.ndarray,
                        sbs_pos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(V, B) arrays of average downlink and uplink SNR (linear)."""
    d = pairwise_distance(uav_pos, sbs_pos)
    if np.any(d < params.ref_distance_m):
        raise DomainError("UAV-SBS distance below reference distance")
    dh = uav_pos[:, None, 2] - sbs_pos[None, :, 2]
    phi = np.degrees(np.arcsin(np.clip(dh / d, -1.0, 1.0)))
    p_los = 1.0 / (1.0 + params.env_x * np.exp(-params.env_y * (phi - params.env_x)))
    lfs = free_space_loss(params)
    l_los = lfs + 10.0 * params.pl_exp_los * np.log10(d)
    l_nlos = lfs + 10.0 * params.pl_exp_nlos * np.log10(d)
    down_loss = p_los * l_los + (1.0 - p_los) * l_nlos
    s6_los = 10.0 * params.sub6_pl_exp * np.log10(d)
    s6_nlos = s6_los + 10.0 * np.log10(params.sub6_nlos_atten)
    up_loss = p_los * s6_los + (1.0 - p_los) * s6_nlos
    noise = params.noise_w
    down = dbm_to_watts(params.tx_power_uav_dbm) / (10.0 ** (down_loss / 10.0) * noise)
    up = dbm_to_watts(params.tx_power_sbs_dbm) / (10.0 ** (up_loss / 10.0) * noise)
    return down, up


def access_sinr_matrix(params: RadioParams, gains: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(U, B) downlink and uplink SINR from a (U, B) gain matrix ``gains[i, j] = h_ij``."""
    noise = params.noise_w
    p_b = dbm_to_watts(params.tx_power_sbs_dbm)
    p_u = dbm_to_watts(params.tx_power_user_dbm)
    rx_down = p_b * gains
    down = rx_down / (rx_down.sum(axis=1, keepdims=True) - rx_down + noise)
    rx_up = p_u * gains
    up = rx_up / (rx_up.sum(axis=0, keepdims=True) - rx_up + noise)
    return down, up
