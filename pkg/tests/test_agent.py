import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from elsmvr.agent import (
    Policy, QLearner, ReservoirLearner, SbsView, boltzmann, build_agents,
    choose_mode, engineered_fixture, enumerate_actions, epsilon_greedy, learning_round,
    select_action, theorem3_check,
)
from elsmvr.config import ScenarioConfig
from elsmvr.errors import ConfigurationError
from elsmvr.scenario import FULL, NONE, VISIBLE, Network, generate_topology

CFG = ScenarioConfig(b_sd_mhz=160, b_su_mhz=40, d_ms=1000, uav_altitude_m=300)


def view(n_users=1, candidates=(), home=(0,), m=1, capacity=60e6):
    return SbsView(0, n_users, max(m, 1), candidates, home, m, capacity, 50e6, 12.5e6)


# -- exploration ----------------------------------------------------------------------

def test_boltzmann_normalised_and_stable():
    p = boltzmann([1000.0, 999.0, -5.0], 1.0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert p[0] == pytest.approx(1 / (1 + np.exp(-1)), rel=1e-6)
    with pytest.raises(ConfigurationError):
        boltzmann([1.0], 0.0)


def test_equal_estimates_split_evenly():
    rng = np.random.default_rng(0)
    pol = Policy.from_estimates([2.0, 2.0], 1.25)
    counts = np.bincount([select_action(pol, rng) for _ in range(10_000)], minlength=2)
    assert chisquare(counts).pvalue > 0.01


def test_temperature_limits():
    y = np.array([0.3, 1.0, 0.2, 0.9])
    assert np.allclose(boltzmann(y, 1e9), 0.25, atol=1e-9)
    assert boltzmann(y, 1e-6)[1] == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    pol = Policy.from_estimates(y, 1e-3)
    assert all(select_action(pol, rng) == 1 for _ in range(1000))


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.floats(0.01, 100), st.floats(0.1, 10))
def test_boltzmann_scaling_invariance(y, c, kappa):
    a = boltzmann(np.array(y) * c, kappa * c)
    b = boltzmann(np.array(y), kappa)
    assert np.allclose(a, b, atol=1e-9)
    assert abs(a.sum() - 1) < 1e-12


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=10), st.floats(0, 1))
def test_epsilon_greedy_is_a_distribution(y, eps):
    p = epsilon_greedy(y, eps)
    Policy(p)
    assert p[int(np.argmax(y))] == pytest.approx(1 - eps + eps / len(y))


def test_policy_validation():
    with pytest.raises(ConfigurationError):
        Policy(np.array([0.5, 0.6]))
    with pytest.raises(ConfigurationError):
        Policy(np.array([]))
    assert Policy(np.array([0.1, 0.7, 0.2])).index == 1


# -- action sets -----------------------------------------------------------------------

def test_single_user_single_content_counts():
    assert len(enumerate_actions(view(), "o_prime")) == 2
    o = enumerate_actions(view(capacity=50e6), "o")
    assert len(o) == 3
    assert sorted(o.plans[:, 0].tolist()) == [NONE, VISIBLE, FULL]


def test_cap_and_seed_determinism():
    v = view(n_users=10, candidates=tuple(range(10)), home=(0, 1), m=4, capacity=100e6)
    a = enumerate_actions(v, "o", cap=256, seed=9)
    b = enumerate_actions(v, "o", cap=256, seed=9)
    assert len(a) <= 256
    assert np.array_equal(a.claims, b.claims) and np.array_equal(a.plans, b.plans)
    rows = {(tuple(c), tuple(p)) for c, p in zip(a.claims, a.plans)}
    assert len(rows) == len(a)
    # the home-claiming all-miss action is always kept
    assert any(c[[0, 1]].all() and not c[2:].any() and (p == NONE).all()
               for c, p in zip(a.claims, a.plans))


def test_mode_o_actions_feasible():
    v = view(n_users=8, candidates=tuple(range(8)), home=(0, 1, 2), m=5, capacity=75e6)
    space = enumerate_actions(v, "o", cap=128, seed=2)
    for c, p in zip(space.claims, space.plans):
        assert v.feasible(tuple(int(x) for x in p), max(int(c.sum()), 1))


def test_mode_choice():
    assert choose_mode(view(capacity=60e6)) == "o"
    assert choose_mode(view(capacity=1e6)) == "o_prime"
    assert choose_mode(view(capacity=1e6), "o") == "o"
    with pytest.raises(ConfigurationError):
        choose_mode(view(), "bogus")
    with pytest.raises(ConfigurationError):
        enumerate_actions(view(), "bogus")


# -- learners ---------------------------------------------------------------------------

def test_q_bandit_finds_best_arm():
    rng = np.random.default_rng(0)
    means = np.array([0.2, 0.5, 0.9, 0.4])
    q = QLearner(4, alpha=0.1, gamma=0.0, eps_start=1.0, eps_end=0.02, eps_decay=0.99)
    q.observe(np.array([0]), np.array([1]))
    for _ in range(600):
        a = select_action(q.policy(), rng)
        q.learn(a, float(rng.random() < means[a]))
        q.end_period()
    picks = [select_action(q.policy(), rng) for _ in range(2000)]
    assert np.mean(np.array(picks) == 2) > 0.9


def test_q_zero_learning_rate_keeps_table():
    q = QLearner(3, alpha=0.0)
    q.observe(np.array([1, 2]), np.array([3, 3]))
    for a in range(3):
        q.learn(a, 5.0)
    assert not q.q((1, 2)).any()


def test_single_action_learner_tracks_mean():
    rng = np.random.default_rng(0)
    q = QLearner(1, alpha=0.05, gamma=0.0)
    for _ in range(3000):
        q.learn(0, 2.0 + rng.normal(0, 0.5))
    assert q.q(())[0] == pytest.approx(2.0, abs=0.15)


def test_reservoir_learner_single_action_is_lms():
    lr = ReservoirLearner(1, 2, use_liquid=False, kappa=1.0, n_reservoir=20, learning_rate=0.05, seed=1)
    for _ in range(2000):
        lr.observe(np.array([0, 0]), np.array([1, 1]))
        lr.learn(0, 3.0)
    assert lr.estimates()[0] == pytest.approx(3.0, abs=1e-3)


def _agents(alg="elsm", seed=0, **kw):
    cfg = CFG.replace(**kw)
    net = Network(cfg, generate_topology(cfg, seed))
    return net, build_agents(net, alg, np.random.default_rng(seed))


def test_first_round_policy_is_uniform():
    net, agents = _agents()
    rng = np.random.default_rng(0)
    req = rng.integers(0, net.n_contents, (CFG.n_tau, net.n_users))
    res = learning_round(agents, net, 0, req, rng, rng, "elsm", 10.0)
    for ag in agents:
        assert np.allclose(ag.policy.probs, 1.0 / len(ag.actions))
    assert res.actions.shape == (CFG.n_tau, net.n_sbs)
    for ag, col in zip(agents, res.actions.T):
        assert ((0 <= col) & (col < len(ag.actions))).all()
    for out in res.outcomes:
        assert np.bincount(out.assoc, minlength=net.n_sbs).sum() == net.n_users


def test_round_updates_only_taken_rows():
    net, agents = _agents()
    rng = np.random.default_rng(1)
    req = rng.integers(0, net.n_contents, (CFG.n_tau, net.n_users))
    before = [ag.learner.esn.w_out.copy() for ag in agents]
    res = learning_round(agents, net, 0, req, rng, rng, "elsm", 10.0)
    for ag, w0, col in zip(agents, before, res.actions.T):
        changed = set(np.flatnonzero(np.any(ag.learner.esn.w_out != w0, axis=1)))
        assert changed <= set(col.tolist())


@pytest.mark.parametrize("alg", ["elsm-random-format", "elsm-random-cache"])
def test_random_variants(alg):
    net, agents = _agents(alg, action_mode="o_prime")
    rng = np.random.default_rng(2)
    picks = []
    for tau in range(30):
        req = rng.integers(0, net.n_contents, (CFG.n_tau, net.n_users))
        res = learning_round(agents, net, tau, req, rng, rng, alg, 10.0)
        for out in res.outcomes:
            used = ((out.cache == VISIBLE).sum(1) * out.users_per_sbs * 12.5e6
                    + (out.cache == FULL).sum(1) * 50e6)
            assert (used <= net.capacity).all()
            picks.extend(out.formats[out.formats != NONE].tolist())
    if alg == "elsm-random-format":
        counts = np.bincount(picks, minlength=3)[1:]
        assert chisquare(counts).pvalue > 0.01


def test_esn_agent_uses_raw_indices():
    net, agents = _agents("esn")
    assert all(ag.learner.liquid is None for ag in agents)
    assert all(ag.learner.esn.config.n_inputs == net.n_sbs for ag in agents)


# -- Theorem 3 ----------------------------------------------------------------------------

def test_theorem3_uniform_limit():
    fx, _ = engineered_fixture()
    r = theorem3_check(1e6, 1.0, fx, seed=1)
    assert r["same_distribution"]
    assert np.allclose(r["p_boltzmann"], 0.25, atol=1e-5)
    n = 100_000
    counts = np.bincount(np.random.default_rng(2).choice(4, n, p=r["p_boltzmann"]), minlength=4)
    assert (np.abs(counts - n / 4) <= 3 * np.sqrt(n * 0.25 * 0.75)).all()


def test_theorem3_greedy_limit():
    fx, _ = engineered_fixture()
    r = theorem3_check(1e-6, 0.0, fx, seed=3)
    assert r["same_distribution"]
    assert r["p_boltzmann"][fx.optimal] == 1.0 and r["p_epsilon"][fx.optimal] == 1.0
    assert r["expected_boltzmann"] == r["expected_epsilon"]


def test_theorem3_strict_ordering():
    fx, eps = engineered_fixture(0.8, 0.6)
    r = theorem3_check(1.0, eps, fx, seed=4)
    assert r["p_boltzmann"][0] == pytest.approx(0.8)
    assert r["p_epsilon"][0] == pytest.approx(0.6)
    assert r["expected_boltzmann"] > r["expected_epsilon"]
    assert r["boltzmann_better"]
    lo, hi = r["mc_ci"]
    exact = r["expected_boltzmann"] - r["expected_epsilon"]
    assert lo <= exact <= hi


@settings(max_examples=30)
@given(st.floats(0.3, 0.95), st.floats(0.3, 0.95))
def test_expected_reliability_is_monotone_in_optimal_mass(pb, pe):
    fx, eps = engineered_fixture(pb, pe)
    diff = fx.expected(boltzmann(fx.y, 1.0)) - fx.expected(epsilon_greedy(fx.y, eps))
    if pb > pe + 1e-9:
        assert diff > 0
    elif pe > pb + 1e-9:
        assert diff < 0
