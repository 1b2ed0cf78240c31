"""Per-SBS learning agents: action sets, exploration policies and the round loop.

Each SBS owns a finite action set. In mode ``o`` an action fixes which
users the SBS claims and what it caches; transmission formats then follow
the closed-form rule. In mode ``o_prime`` an action fixes the claims and a
per-content transmission format; the cache is then the knapsack optimum.
Agents estimate the reliability of every action, pick actions by a
Boltzmann policy and learn from the realised success counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .reservoir import (
    EsnConfig, build_esn, build_liquid, encode_policy_indices, step_liquid, train_step, update_reservoir,
)
from .scenario import FULL, NONE, VISIBLE, Network, SlotOutcome

MODES = ("o", "o_prime")


# -- exploration policies -------------------------------------------------------

def boltzmann(y, kappa: float) -> np.ndarray:
    """Softmax of ``y / kappa`` with the full denominator."""
    if kappa <= 0:
        raise ConfigurationError("temperature must be positive")
    z = np.asarray(y, dtype=float) / kappa
    z = np.exp(z - z.max())
    return z / z.sum()


def epsilon_greedy(y, epsilon: float) -> np.ndarray:
    """Mass ``1 - eps + eps/N`` on the first argmax, ``eps/N`` elsewhere."""
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigurationError("epsilon must lie in [0, 1]")
    y = np.asarray(y, dtype=float)
    p = np.full(y.size, epsilon / y.size)
    p[int(np.argmax(y))] += 1.0 - epsilon
    return p


@dataclass(frozen=True)
class Policy:
    probs: np.ndarray
    kappa: float = 1.0

    def __post_init__(self):
        p = self.probs
        if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigurationError("policy must be a non-negative vector summing to 1")

    @classmethod
    def uniform(cls, n: int, kappa: float = 1.0) -> Policy:
        return cls(np.full(n, 1.0 / n), kappa)

    @classmethod
    def from_estimates(cls, y, kappa: float) -> Policy:
        return cls(boltzmann(y, kappa), kappa)

    @property
    def index(self) -> int:
        """The index broadcast to peers: the most likely action."""
        return int(np.argmax(self.probs))


def select_action(policy: Policy, rng: np.random.Generator) -> int:
    cdf = np.cumsum(policy.probs)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), cdf.size - 1))


# -- action sets ----------------------------------------------------------------

@dataclass(frozen=True)
class SbsView:
    """What one SBS knows when building its action set."""

    sbs_id: int
    n_users: int
    n_contents: int
    candidates: tuple[int, ...]      # users that may be claimed
    home: tuple[int, ...]            # users for which this SBS is nearest
    cache_contents: int              # contents the action controls (most popular first)
    capacity_bits: float
    size_360_bits: float
    size_visible_bits: float

    @classmethod
    def from_network(cls, net: Network, sbs_id: int) -> SbsView:
        cat = net.catalog
        return cls(sbs_id, net.n_users, net.n_contents, tuple(int(u) for u in net.candidates[sbs_id]),
                   tuple(int(u) for u in net.home[sbs_id]),
                   min(net.config.cache_contents, net.n_contents), net.capacity,
                   cat.size_360_bits, cat.size_visible_bits)

    def cost(self, code: int, users: int) -> float:
        if code == FULL:
            return self.size_360_bits
        if code == VISIBLE:
            return users * self.size_visible_bits
        return 0.0

    def feasible(self, cache: tuple[int, ...], users: int) -> bool:
        return sum(self.cost(c, users) for c in cache) <= self.capacity_bits


@dataclass(frozen=True)
class Action:
    mode: str
    claims: frozenset
    plan: tuple[int, ...]   # cache codes (mode o) or format codes, 0 = closed-form rule (mode o_prime)


@dataclass
class ActionSpace:
    mode: str
    claims: np.ndarray      # (A, U) bool
    plans: np.ndarray       # (A, N) int8

    def __len__(self) -> int:
        return self.claims.shape[0]

    def action(self, i: int) -> Action:
        return Action(self.mode, frozenset(np.flatnonzero(self.claims[i]).tolist()),
                      tuple(int(c) for c in self.plans[i]))


def choose_mode(view: SbsView, setting: str = "auto") -> str:
    """``o`` when the cache can hold the most popular content in its cheaper format."""
    if setting in MODES:
        return setting
    if setting != "auto":
        raise ConfigurationError(f"unknown action mode {setting!r}")
    cheapest = min(view.size_360_bits, max(len(view.home), 1) * view.size_visible_bits)
    return "o" if view.capacity_bits >= cheapest else "o_prime"


def greedy_cache(view: SbsView, users: int) -> tuple[int, ...]:
    codes, used = [], 0.0
    for _ in range(view.cache_contents):
        for code in (VISIBLE, FULL):
            c = view.cost(code, users)
            if used + c <= view.capacity_bits:
                codes.append(code)
                used += c
                break
        else:
            codes.append(NONE)
    return tuple(codes)


def enumerate_actions(view: SbsView, mode: str, cap: int = 256, seed: int = 0) -> ActionSpace:
    """Deterministic, deduplicated action set of at most ``cap`` entries.

    Claims range over subsets of the candidate users; the plan covers the
    ``cache_contents`` most popular contents. When the full product exceeds
    ``cap`` a seeded uniform sample is taken, always keeping the all-miss and
    greedy-association actions. Mode ``o`` entries are feasible for a cache
    shared by the claimed users (at least one).
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}")
    if cap < 1:
        raise ConfigurationError("action cap must be >= 1")
    cand, m = list(view.candidates), view.cache_contents
    # claiming a user with no alternative SBS changes nothing
    home = frozenset(view.home) & frozenset(cand)
    plan_values = (NONE, VISIBLE, FULL) if mode == "o" else (VISIBLE, FULL)

    def ok(claims: frozenset, plan: tuple) -> bool:
        return mode != "o" or view.feasible(plan, max(len(claims), 1))

    if mode == "o":
        keep = [(home, (NONE,) * m), (home, greedy_cache(view, max(len(home), 1)))]
    else:
        keep = [(home, (VISIBLE,) * m), (home, (FULL,) * m)]
    keep = [k for k in keep if ok(*k)][:cap]

    n_claims, n_plans = 2 ** len(cand), len(plan_values) ** m
    total = n_claims * n_plans
    chosen: dict = {k: None for k in keep}

    def decode(idx: int):
        ci, pi = divmod(idx, n_plans)
        claims = frozenset(u for b, u in enumerate(cand) if ci >> b & 1)
        plan = []
        for _ in range(m):
            pi, r = divmod(pi, len(plan_values))
            plan.append(plan_values[r])
        return claims, tuple(plan)

    if total <= 4 * cap:
        pool = [decode(i) for i in range(total)]
        pool = [p for p in pool if ok(*p) and p not in chosen]
        if len(pool) + len(chosen) > cap:
            rng = np.random.default_rng(seed)
            pick = rng.choice(len(pool), size=cap - len(chosen), replace=False)
            pool = [pool[i] for i in sorted(pick)]
        for p in pool:
            chosen[p] = None
    else:
        rng = np.random.default_rng(seed)
        attempts = 0
        while len(chosen) < cap and attempts < 200 * cap:
            attempts += 1
            p = decode(int(rng.integers(total)))
            if ok(*p):
                chosen.setdefault(p, None)
    if not chosen:
        raise ConfigurationError(f"SBS {view.sbs_id}: no feasible action")

    items = list(chosen)
    claims = np.zeros((len(items), view.n_users), dtype=bool)
    plans = np.zeros((len(items), view.n_contents), dtype=np.int8)
    for i, (c, p) in enumerate(items):
        claims[i, list(c)] = True
        plans[i, :m] = p
    return ActionSpace(mode, claims, plans)


# -- learners -------------------------------------------------------------------

class ReservoirLearner:
    """Liquid column (optional) feeding an ESN whose readout estimates per-action reliability."""

    def __init__(self, n_actions: int, n_peers: int, *, use_liquid: bool, kappa: float,
                 liquid_config=None, n_reservoir: int = 100, spectral_radius: float = 0.9,
                 input_scaling: float = 1.0, learning_rate: float = 0.01, lr_decay: bool = False,
                 spike_output: bool = False, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.kappa = kappa
        self.n_actions = n_actions
        self.spike_output = spike_output
        self.liquid = None
        if use_liquid:
            self.liquid = build_liquid(liquid_config, seed=int(rng.integers(2**31)))
            n_in = liquid_config.slots_per_period * liquid_config.n_neurons
        else:
            n_in = n_peers
        self.esn = build_esn(EsnConfig(n_reservoir, n_in, n_actions, spectral_radius, input_scaling,
                                       learning_rate, lr_decay), seed=int(rng.integers(2**31)))
        self.phi = np.zeros(n_in)

    def estimates(self) -> np.ndarray:
        n_w = self.esn.config.n_reservoir
        return self.esn.w_out[:, :n_w] @ self.esn.mu + self.esn.w_out[:, n_w:] @ self.phi

    def observe(self, peer_indices: np.ndarray, n_policies: np.ndarray) -> None:
        if self.liquid is not None:
            self.phi = step_liquid(self.liquid, peer_indices, n_policies, self.spike_output)
        else:
            self.phi = encode_policy_indices(peer_indices, n_policies)
        update_reservoir(self.esn, self.phi)

    def learn(self, action: int, reward: float) -> None:
        pred = float(self.esn.w_out[action] @ self.esn.features(self.phi))
        train_step(self.esn, action, reward, pred, self.phi)


class QLearner:
    """Tabular Q-learning; the state is the tuple of peer policy indices."""

    def __init__(self, n_actions: int, alpha: float = 0.1, gamma: float = 0.5,
                 eps_start: float = 1.0, eps_end: float = 0.05, eps_decay: float = 0.999):
        self.n_actions = n_actions
        self.alpha, self.gamma = alpha, gamma
        self.epsilon, self.eps_end, self.eps_decay = eps_start, eps_end, eps_decay
        self.table: dict[tuple, np.ndarray] = {}
        self.state: tuple = ()

    def q(self, state: tuple) -> np.ndarray:
        row = self.table.get(state)
        if row is None:
            row = self.table[state] = np.zeros(self.n_actions)
        return row

    def estimates(self) -> np.ndarray:
        return self.q(self.state)

    def observe(self, peer_indices: np.ndarray, n_policies: np.ndarray) -> None:
        self.state = tuple(int(i) for i in peer_indices)

    def policy(self) -> Policy:
        return Policy(epsilon_greedy(self.estimates(), self.epsilon))

    def learn(self, action: int, reward: float) -> None:
        row = self.q(self.state)
        target = reward + self.gamma * row.max()
        row[action] += self.alpha * (target - row[action])

    def end_period(self) -> None:
        self.epsilon = max(self.eps_end, self.epsilon * self.eps_decay)


@dataclass
class Agent:
    sbs_id: int
    actions: ActionSpace
    learner: ReservoirLearner | QLearner
    policy: Policy
    peer_indices: np.ndarray = field(default_factory=lambda: np.zeros(0))
    last_estimates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def set_policy(self, tau: int) -> Policy:
        y = self.learner.estimates()
        self.last_estimates = y.copy()
        if isinstance(self.learner, QLearner):
            self.policy = self.learner.policy()
        elif tau == 0:
            self.policy = Policy.uniform(len(self.actions), self.learner.kappa)
        else:
            self.policy = Policy.from_estimates(y, self.learner.kappa)
        return self.policy


def build_agents(net: Network, algorithm: str, rng: np.random.Generator) -> list[Agent]:
    cfg = net.config
    agents = []
    for j in range(net.n_sbs):
        view = SbsView.from_network(net, j)
        mode = choose_mode(view, cfg.action_mode)
        space = enumerate_actions(view, mode, cfg.action_cap, seed=int(rng.integers(2**31)))
        seed = int(rng.integers(2**31))
        if algorithm == "qlearning":
            learner = QLearner(len(space), cfg.q_alpha, cfg.q_gamma, cfg.q_eps_start,
                               cfg.q_eps_end, cfg.q_eps_decay)
        else:
            learner = ReservoirLearner(
                len(space), net.n_sbs, use_liquid=algorithm != "esn", kappa=cfg.kappa,
                liquid_config=cfg.liquid(seed), n_reservoir=cfg.n_w,
                spectral_radius=cfg.spectral_radius, input_scaling=cfg.esn_input_scaling,
                learning_rate=cfg.lr, lr_decay=cfg.lr_decay, spike_output=cfg.spike_output, seed=seed,
            )
        agents.append(Agent(j, space, learner, Policy.uniform(len(space))))
    return agents


@dataclass
class RoundResult:
    outcomes: list[SlotOutcome]
    actions: np.ndarray              # (slots, B) executed action indices
    indices: np.ndarray              # (B,) broadcast policy indices

    @property
    def per_sbs(self) -> np.ndarray:
        """Mean successful users per SBS over the round's slots."""
        return np.mean([o.per_sbs for o in self.outcomes], axis=0)


def learning_round(agents: list[Agent], net: Network, tau: int, requests: np.ndarray,
                   fading_rng: np.random.Generator, act_rng: np.random.Generator,
                   algorithm: str = "elsm", reward_scale: float = 1.0) -> RoundResult:
    """One period: estimate, set and broadcast policies, drive the learners, act and learn per slot.

    ``requests`` is (slots, U). The same fading and action generators are
    consumed in a fixed order so a run is reproducible.
    """
    for ag in agents:
        ag.set_policy(tau)
    indices = np.array([ag.policy.index for ag in agents])
    sizes = np.array([len(ag.actions) for ag in agents])
    for ag in agents:
        ag.peer_indices = indices
        ag.learner.observe(indices, sizes)

    b = len(agents)
    rand_cache = [algorithm == "elsm-random-cache"] * b
    rand_format = [algorithm == "elsm-random-format"] * b
    outcomes, taken = [], np.empty((requests.shape[0], b), dtype=np.int64)
    for s, req in enumerate(requests):
        choice = [select_action(ag.policy, act_rng) for ag in agents]
        taken[s] = choice
        claims = np.stack([ag.actions.claims[c] for ag, c in zip(agents, choice)])
        cache_plans, format_plans = [], []
        for ag, c in zip(agents, choice):
            plan = ag.actions.plans[c]
            if ag.actions.mode == "o":
                cache_plans.append(plan)
                format_plans.append(None)
            else:
                cache_plans.append(None)
                format_plans.append(plan)
        gains = net.draw_fading(fading_rng)
        out = net.evaluate(req, gains, claims, cache_plans, format_plans, rng=act_rng,
                           random_cache=rand_cache, random_format=rand_format)
        outcomes.append(out)
        for ag, c in zip(agents, choice):
            ag.learner.learn(c, reward_scale * float(out.per_sbs[ag.sbs_id]))
    for ag in agents:
        if isinstance(ag.learner, QLearner):
            ag.learner.end_period()
    return RoundResult(outcomes, taken, indices)


# -- exploration-policy comparison ------------------------------------------------

@dataclass(frozen=True)
class Theorem3Fixture:
    """One agent with estimates ``y`` facing peers with fixed action distributions.

    ``reliability[o, *peer_actions]`` is the agent's reliability for every
    joint profile; ``optimal`` is the agent's best action.
    """

    y: np.ndarray
    peer_policies: tuple[np.ndarray, ...]
    reliability: np.ndarray
    optimal: int

    def expected(self, probs: np.ndarray) -> float:
        t = self.reliability
        for p in reversed(self.peer_policies):
            t = t @ p
        return float(probs @ t)

    def sample(self, probs: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
        own = rng.choice(len(probs), size=n, p=probs)
        idx = [own] + [rng.choice(len(p), size=n, p=p) for p in self.peer_policies]
        return self.reliability[tuple(idx)]


def engineered_fixture(p_boltzmann: float = 0.8, p_greedy: float = 0.6, n_actions: int = 4,
                       kappa: float = 1.0) -> tuple[Theorem3Fixture, float]:
    """Fixture whose Boltzmann mass on the optimum is ``p_boltzmann`` and
    whose epsilon-greedy mass is ``p_greedy``; returns it with the matching epsilon."""
    n = n_actions
    # e^{d/k} / (e^{d/k} + n - 1) = p  =>  d = k * log(p (n-1) / (1-p))
    gap = kappa * np.log(p_boltzmann * (n - 1) / (1.0 - p_boltzmann))
    y = np.zeros(n)
    y[0] = gap
    epsilon = (1.0 - p_greedy) * n / (n - 1)
    peer = np.array([0.5, 0.3, 0.2])
    rel = np.empty((n, peer.size))
    rel[0] = [0.9, 0.8, 0.7]
    for o in range(1, n):
        rel[o] = [0.5 - 0.05 * o, 0.4, 0.3]
    return Theorem3Fixture(y, (peer,), rel, 0), epsilon


def theorem3_check(kappa: float, epsilon: float, fixture: Theorem3Fixture,
                   draws: int = 100_000, seed: int = 0) -> dict:
    """Compare Boltzmann(kappa) with epsilon-greedy(epsilon) on ``fixture``.

    Returns both selection distributions, a chi-square test of their
    empirical draws, the exact expected reliabilities, and a Monte-Carlo
    95% interval on the difference of expected reliabilities.
    """
    from scipy.stats import chi2_contingency

    rng = np.random.default_rng(seed)
    p_b = boltzmann(fixture.y, kappa)
    p_e = epsilon_greedy(fixture.y, epsilon)
    n = len(p_b)
    c_b = np.bincount(rng.choice(n, size=draws, p=p_b), minlength=n)
    c_e = np.bincount(rng.choice(n, size=draws, p=p_e), minlength=n)
    table = np.array([c_b, c_e])
    table = table[:, table.sum(axis=0) > 0]
    p_value = 1.0 if table.shape[1] < 2 else float(chi2_contingency(table)[1])
    r_b, r_e = fixture.sample(p_b, rng, draws), fixture.sample(p_e, rng, draws)
    diff = r_b.mean() - r_e.mean()
    se = np.sqrt(r_b.var(ddof=1) / draws + r_e.var(ddof=1) / draws)
    return {
        "p_boltzmann": p_b, "p_epsilon": p_e, "chi2_p": p_value,
        "expected_boltzmann": fixture.expected(p_b), "expected_epsilon": fixture.expected(p_e),
        "mc_diff": float(diff), "mc_ci": (float(diff - 1.96 * se), float(diff + 1.96 * se)),
        "same_distribution": p_value > 0.01,
        "boltzmann_better": bool(diff - 1.96 * se > 0),
    }

