"""Spiking liquid column feeding an echo state network with a trained linear readout.

The liquid is a 3-D grid of leaky integrate-and-fire neurons with
distance-dependent random synapses. Each period it is driven by a small
integer input vector (one policy index per SBS) for ``slots_per_period``
steps and the stacked membrane vectors form its output. The ESN keeps a
tanh reservoir state updated from that output; only the readout rows are
trained, one row per step, by an LMS rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

PAIR_TYPES = ("EE", "EI", "IE", "II")


@dataclass(frozen=True)
class LiquidConfig:
    dims: tuple[int, int, int] = (5, 5, 5)
    excitatory_fraction: float = 0.8
    connection_base: dict = field(default_factory=lambda: {"EE": 0.3, "EI": 0.2, "IE": 0.4, "II": 0.1})
    synapse_weight: dict = field(default_factory=lambda: {"EE": 0.6, "EI": 0.6, "IE": 0.8, "II": 0.8})
    length_scale: float = 2.0
    input_connect_prob: float = 0.3
    input_gain: float = 2.0
    membrane_tau_slots: float = 3.0
    threshold: float = 1.0
    reset_potential: float = 0.0
    refractory_slots: int = 2
    slots_per_period: int = 10
    n_inputs: int = 5
    seed: int = 0

    def __post_init__(self):
        if min(self.dims) < 1:
            raise ConfigurationError("liquid dims must be >= 1")
        probs = [self.excitatory_fraction, self.input_connect_prob, *self.connection_base.values()]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ConfigurationError("probabilities must lie in [0, 1]")
        if set(self.connection_base) != set(PAIR_TYPES) or set(self.synapse_weight) != set(PAIR_TYPES):
            raise ConfigurationError(f"need one entry per type pair {PAIR_TYPES}")
        if self.length_scale <= 0 or self.membrane_tau_slots <= 0:
            raise ConfigurationError("length scale and membrane time constant must be positive")
        if self.threshold <= self.reset_potential:
            raise ConfigurationError("threshold must exceed the reset potential")
        if self.slots_per_period < 1 or self.n_inputs < 1 or self.refractory_slots < 0:
            raise ConfigurationError("bad slot/input/refractory counts")

    @property
    def n_neurons(self) -> int:
        return int(np.prod(self.dims))


def connection_probability(base: float, distance: float, length_scale: float) -> float:
    return base * np.exp(-(distance / length_scale) ** 2)


@dataclass
class LiquidState:
    config: LiquidConfig
    coords: np.ndarray          # (N, 3) integer grid positions
    excitatory: np.ndarray      # (N,) bool
    adjacency: np.ndarray       # (N, N) bool, pre i -> post j
    weights: np.ndarray         # (N, N) signed synaptic weights, zero where absent
    input_taps: np.ndarray      # (N, n_inputs) bool
    v: np.ndarray
    spikes: np.ndarray
    refractory: np.ndarray
    record_spikes: bool = False

    @property
    def n_neurons(self) -> int:
        return self.v.shape[0]

    def reset(self) -> None:
        self.v[:] = 0.0
        self.spikes[:] = False
        self.refractory[:] = 0


def pair_type_matrix(excitatory: np.ndarray) -> np.ndarray:
    """(N, N) array of type-pair codes, index into PAIR_TYPES (pre first)."""
    pre = np.where(excitatory, 0, 2)[:, None]
    post = np.where(excitatory, 0, 1)[None, :]
    return pre + post


def build_liquid(config: LiquidConfig, seed: int | None = None) -> LiquidState:
    rng = np.random.default_rng(config.seed if seed is None else seed)
    n = config.n_neurons
    coords = np.array(list(itertools.product(*(range(d) for d in config.dims))), dtype=float)
    n_exc = int(round(config.excitatory_fraction * n))
    excitatory = np.zeros(n, dtype=bool)
    excitatory[rng.permutation(n)[:n_exc]] = True

    dist = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)
    codes = pair_type_matrix(excitatory)
    base = np.array([config.connection_base[t] for t in PAIR_TYPES])[codes]
    prob = connection_probability(base, dist, config.length_scale)
    np.fill_diagonal(prob, 0.0)
    adjacency = rng.random((n, n)) < prob

    magnitude = np.array([config.synapse_weight[t] for t in PAIR_TYPES])[codes]
    sign = np.where(excitatory, 1.0, -1.0)[:, None]
    weights = np.where(adjacency, sign * magnitude, 0.0)

    taps = rng.random((n, config.n_inputs)) < config.input_connect_prob
    return LiquidState(
        config=config, coords=coords, excitatory=excitatory, adjacency=adjacency,
        weights=weights, input_taps=taps, v=np.zeros(n), spikes=np.zeros(n, dtype=bool),
        refractory=np.zeros(n, dtype=np.int64),
    )


def encode_policy_indices(indices, n_policies) -> np.ndarray:
    """Policy index k out of n maps to a constant drive (k + 1) / n."""
    x = np.asarray(indices, dtype=float)
    return (x + 1.0) / np.asarray(n_policies, dtype=float)


def lif_step(state: LiquidState, drive: np.ndarray) -> None:
    """One slot of leaky integration, threshold, reset and refractory hold."""
    cfg = state.config
    syn = state.weights.T @ state.spikes.astype(float)
    current = drive + syn
    active = state.refractory == 0
    a = 1.0 / cfg.membrane_tau_slots
    v = state.v
    v[active] += a * (current[active] - v[active])
    fired = active & (v >= cfg.threshold)
    v[fired] = cfg.reset_potential
    state.refractory[~active] -= 1
    state.refractory[fired] = cfg.refractory_slots
    state.spikes = fired


def step_liquid(state: LiquidState, inputs, n_policies=None, spike_counts: bool = False) -> np.ndarray:
    """Drive the liquid for one period and return the stacked per-slot outputs.

    ``inputs`` holds one policy index per input line; ``n_policies`` (scalar or
    per line) sets the encoding denominator. When it is None the values are
    used as drive currents directly. The result has length
    ``slots_per_period * n_neurons``: membrane values, or spike flags when
    ``spike_counts`` is set.
    """
    cfg = state.config
    inputs = np.asarray(inputs, dtype=float)
    if inputs.shape != (cfg.n_inputs,):
        raise ConfigurationError(f"liquid expects {cfg.n_inputs} inputs, got shape {inputs.shape}")
    x = inputs if n_policies is None else encode_policy_indices(inputs, n_policies)
    drive = cfg.input_gain * (state.input_taps.astype(float) @ x)
    out = np.empty((cfg.slots_per_period, state.n_neurons))
    for s in range(cfg.slots_per_period):
        lif_step(state, drive)
        out[s] = state.spikes if spike_counts else state.v
    return out.reshape(-1)


def lif_interspike_interval(drive: float, threshold: float, tau_slots: float,
                            refractory_slots: int, reset: float = 0.0) -> int:
    """Closed-form spike period of an isolated neuron under constant drive."""
    if drive <= threshold:
        raise ConfigurationError("drive must exceed threshold for periodic firing")
    a = 1.0 / tau_slots
    # v_n = drive - (drive - reset) * (1 - a)^n, first n with v_n >= threshold
    n = np.log((drive - threshold) / (drive - reset)) / np.log(1.0 - a)
    steps = int(np.ceil(n - 1e-12))
    return max(steps, 1) + refractory_slots


# -- echo state network -----------------------------------------------------------

@dataclass(frozen=True)
class EsnConfig:
    n_reservoir: int = 100
    n_inputs: int = 1250
    n_outputs: int = 256
    spectral_radius: float = 0.9
    input_scaling: float = 1.0
    learning_rate: float = 0.01
    lr_decay: bool = False
    train_input_columns: bool = False
    seed: int = 0

    def __post_init__(self):
        if min(self.n_reservoir, self.n_inputs, self.n_outputs) < 1:
            raise ConfigurationError("ESN dimensions must be >= 1")
        if self.spectral_radius <= 0:
            raise ConfigurationError("spectral radius target must be positive")
        if self.learning_rate < 0:
            raise ConfigurationError("learning rate must be non-negative")


@dataclass
class EsnState:
    config: EsnConfig
    w_in: np.ndarray
    w: np.ndarray
    w_out: np.ndarray
    mu: np.ndarray
    updates: int = 0

    def features(self, phi: np.ndarray) -> np.ndarray:
        return np.concatenate([self.mu, phi])


def spectral_radius(w: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(w))))


def build_esn(config: EsnConfig, seed: int | None = None) -> EsnState:
    """Dense uniform input and recurrent matrices; recurrent rescaled to the
    target spectral radius; readout starts at zero.

    Input weights are divided by sqrt(n_inputs) so that ``input_scaling``
    sets the pre-activation scale independently of the input width.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    w_in = rng.uniform(-1.0, 1.0, (config.n_reservoir, config.n_inputs))
    w_in *= config.input_scaling / np.sqrt(config.n_inputs)
    w = rng.uniform(-1.0, 1.0, (config.n_reservoir, config.n_reservoir))
    w *= config.spectral_radius / spectral_radius(w)
    w_out = np.zeros((config.n_outputs, config.n_reservoir + config.n_inputs))
    return EsnState(config, w_in, w, w_out, np.zeros(config.n_reservoir))


def _check_input(state: EsnState, phi: np.ndarray) -> None:
    if phi.shape != (state.config.n_inputs,):
        raise ConfigurationError(f"ESN expects input of length {state.config.n_inputs}, got {phi.shape}")


def update_reservoir(state: EsnState, phi: np.ndarray) -> EsnState:
    phi = np.asarray(phi, dtype=float)
    _check_input(state, phi)
    state.mu = np.tanh(state.w @ state.mu + state.w_in @ phi)
    return state


def predict(state: EsnState, phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    _check_input(state, phi)
    return state.w_out @ state.features(phi)


def train_step(state: EsnState, action_index: int, observed: float, predicted: float,
               phi: np.ndarray | None = None) -> EsnState:
    """LMS update of one readout row towards the observed reliability.

    The reservoir columns move by ``lr * error * mu``; the liquid columns only
    when ``train_input_columns`` is set (``phi`` required then).
    """
    cfg = state.config
    if not 0 <= action_index < cfg.n_outputs:
        raise ConfigurationError(f"action {action_index} out of range")
    state.updates += 1
    lr = cfg.learning_rate / np.sqrt(state.updates) if cfg.lr_decay else cfg.learning_rate
    err = observed - predicted
    if err == 0.0:
        return state
    n_w = cfg.n_reservoir
    state.w_out[action_index, :n_w] += lr * err * state.mu
    if cfg.train_input_columns:
        if phi is None:
            raise ConfigurationError("phi needed to train the input columns")
        state.w_out[action_index, n_w:] += lr * err * np.asarray(phi, dtype=float)
    return state


def save_states(path: str | Path, liquid: LiquidState | None, esn: EsnState) -> None:
    arrays = {"w_in": esn.w_in, "w": esn.w, "w_out": esn.w_out, "mu": esn.mu,
              "updates": np.array(esn.updates)}
    if liquid is not None:
        arrays.update(l_v=liquid.v, l_spikes=liquid.spikes, l_refr=liquid.refractory,
                      l_weights=liquid.weights, l_taps=liquid.input_taps,
                      l_exc=liquid.excitatory, l_adj=liquid.adjacency, l_coords=liquid.coords)
    np.savez(path, **arrays)


def load_states(path: str | Path, liquid_config: LiquidConfig | None,
                esn_config: EsnConfig) -> tuple[LiquidState | None, EsnState]:
    with np.load(path) as z:
        esn = EsnState(esn_config, z["w_in"], z["w"], z["w_out"], z["mu"], int(z["updates"]))
        liquid = None
        if liquid_config is not None and "l_v" in z:
            liquid = LiquidState(
                config=liquid_config, coords=z["l_coords"], excitatory=z["l_exc"],
                adjacency=z["l_adj"], weights=z["l_weights"], input_taps=z["l_taps"],
                v=z["l_v"].copy(), spikes=z["l_spikes"].copy(), refractory=z["l_refr"].copy(),
            )
    return liquid, esn
