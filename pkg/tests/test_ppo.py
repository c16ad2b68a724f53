import numpy as np
import pytest
import torch

from vertisched.config import PpoConfig
from vertisched.domain import NUM_ACTIONS, VehicleGraph, VertiportGraph
from vertisched.learning.nets import GraphActorCritic, build_observation
from vertisched.learning.ppo import RolloutBuffer, compute_gae, ppo_loss, ppo_update
from vertisched.simulator import Simulator


# ----------------------------------------------------------------------
# GAE
# ----------------------------------------------------------------------

def gae_oracle(rewards, values, dones, discount, lam):
    """Reference recursion written independently (forward deltas, backward
    accumulation with explicit episode cuts)."""
    n = len(rewards)
    deltas = []
    for t in range(n):
        terminal = dones[t] or t == n - 1
        nv = 0.0 if terminal else values[t + 1]
        deltas.append(rewards[t] + discount * nv - values[t])
    adv = [0.0] * n
    for t in reversed(range(n)):
        terminal = dones[t] or t == n - 1
        carry = 0.0 if terminal else adv[t + 1]
        adv[t] = deltas[t] + discount * lam * carry
    return adv


def test_gae_matches_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 40))
        rewards = rng.standard_normal(n).tolist()
        values = rng.standard_normal(n).tolist()
        dones = (rng.random(n) < 0.15).tolist()
        adv, ret = compute_gae(rewards, values, dones, 0.99, 0.95)
        want = gae_oracle(rewards, values, dones, 0.99, 0.95)
        assert np.allclose(adv.numpy(), want, atol=1e-5)
        assert np.allclose(ret.numpy(), np.array(want) + np.array(values),
                           atol=1e-5)


def test_gae_single_step():
    adv, ret = compute_gae([2.0], [0.5], [True], 0.99, 0.95)
    assert adv.item() == pytest.approx(1.5)
    assert ret.item() == pytest.approx(2.0)


def test_gae_undiscounted_montecarlo_limit():
    # discount = lambda = 1 on one episode: advantage = reward-to-go - value
    rewards = [1.0, 2.0, 3.0]
    values = [0.5, 0.25, -0.5]
    adv, _ = compute_gae(rewards, values, [False, False, True], 1.0, 1.0)
    togo = [6.0, 5.0, 3.0]
    assert np.allclose(adv.numpy(), np.array(togo) - np.array(values))


def test_gae_episode_boundary_blocks_credit():
    # a terminal at t=0 must keep t=1's reward out of t=0's advantage
    adv, _ = compute_gae([0.0, 100.0], [0.0, 0.0], [True, True], 0.99, 0.95)
    assert adv[0].item() == 0.0
    assert adv[1].item() == pytest.approx(100.0)


# ----------------------------------------------------------------------
# PPO loss on a stub network
# ----------------------------------------------------------------------

class StubNet(torch.nn.Module):
    """Returns fixed log-probabilities and values regardless of input."""

    def __init__(self, log_probs, values):
        super().__init__()
        self.log_probs = log_probs
        self.values = values

    def forward(self, vp_feat, vp_adj, ev_feat, ev_adj, vehicle_ids, masks):
        return self.log_probs, self.values


def _batch(n, masks=None, actions=None, old_log_probs=None,
           advantages=None, returns=None):
    zeros = torch.zeros(n, 1)
    if masks is None:
        masks = torch.ones(n, NUM_ACTIONS, dtype=torch.bool)
    if actions is None:
        actions = torch.zeros(n, dtype=torch.long)
    if old_log_probs is None:
        old_log_probs = torch.zeros(n)
    if advantages is None:
        advantages = torch.ones(n)
    if returns is None:
        returns = torch.zeros(n)
    return (zeros, zeros, zeros, zeros, torch.zeros(n, dtype=torch.long),
            masks, actions, old_log_probs, advantages, returns)


def test_ppo_loss_unit_ratio():
    # new log-probs equal the old ones: ratio 1, policy loss = -mean(adv)
    n = 4
    log_probs = torch.log(torch.full((n, NUM_ACTIONS), 1.0 / NUM_ACTIONS))
    values = torch.tensor([1.0, 2.0, 3.0, 4.0])
    net = StubNet(log_probs, values)
    adv = torch.tensor([1.0, -2.0, 3.0, 0.5])
    returns = torch.tensor([0.0, 0.0, 0.0, 0.0])
    batch = _batch(n, old_log_probs=log_probs[:, 0].clone(),
                   advantages=adv, returns=returns)
    cfg = PpoConfig()
    loss, pl, vl, ent, clip_frac = ppo_loss(net, batch, cfg)
    assert pl.item() == pytest.approx(-adv.mean().item(), abs=1e-6)
    assert vl.item() == pytest.approx((values ** 2).mean().item(), abs=1e-5)
    assert ent.item() == pytest.approx(np.log(NUM_ACTIONS), abs=1e-5)
    assert clip_frac.item() == 0.0
    expected = pl + cfg.value_coef * vl - cfg.entropy_coef * ent
    assert loss.item() == pytest.approx(expected.item(), abs=1e-6)


def test_ppo_loss_clips_large_ratios():
    # new policy puts much more mass on the taken action than the old one
    n = 2
    log_probs = torch.full((n, NUM_ACTIONS), -20.0)
    log_probs[:, 0] = -1e-6
    net = StubNet(log_probs, torch.zeros(n))
    old = torch.log(torch.tensor([1.0 / NUM_ACTIONS, 1.0 / NUM_ACTIONS]))
    adv = torch.tensor([1.0, 1.0])
    batch = _batch(n, old_log_probs=old, advantages=adv)
    cfg = PpoConfig(clip_ratio=0.2)
    _, pl, _, _, clip_frac = ppo_loss(net, batch, cfg)
    # positive advantage with ratio >> 1+eps: surrogate pinned at 1.2 * adv
    assert pl.item() == pytest.approx(-1.2, abs=1e-4)
    assert clip_frac.item() == 1.0


def test_ppo_loss_entropy_ignores_masked_actions():
    n = 1
    mask = torch.zeros(n, NUM_ACTIONS, dtype=torch.bool)
    mask[0, :2] = True
    log_probs = torch.full((n, NUM_ACTIONS), -1e9)
    log_probs[0, :2] = np.log(0.5)
    net = StubNet(log_probs, torch.zeros(n))
    batch = _batch(n, masks=mask, old_log_probs=torch.tensor([np.log(0.5)]))
    _, _, _, ent, _ = ppo_loss(net, batch, PpoConfig())
    assert ent.item() == pytest.approx(np.log(2.0), abs=1e-5)


# ----------------------------------------------------------------------
# update loop
# ----------------------------------------------------------------------

def collect_buffer(steps=40):
    sim = Simulator()
    state = sim.reset(0)
    net = GraphActorCritic(VertiportGraph.FEATURE_DIM, VehicleGraph.FEATURE_DIM,
                           hidden_dim=16)
    buffer = RolloutBuffer()
    gen = torch.Generator().manual_seed(0)
    while len(buffer) < steps:
        vid = sim.select_vehicle(state)
        if vid is None:
            sim.noop_step(state)
            continue
        mask = sim.action_mask(state, vid)
        vp_feat, vp_adj, ev_feat, ev_adj = build_observation(state)
        mask_t = torch.tensor(mask, dtype=torch.bool)
        with torch.no_grad():
            log_probs, value = net(vp_feat, vp_adj, ev_feat, ev_adj,
                                   torch.tensor(vid), mask_t)
        action = int(torch.multinomial(torch.exp(log_probs), 1,
                                       generator=gen).item())
        _, out = sim.step(state, vid, action)
        buffer.add(vp_feat, ev_feat, vid, mask_t, action,
                   float(log_probs[action]), float(value), 1.0, False)
        vp_adj_last, ev_adj_last = vp_adj, ev_adj
    buffer.dones[-1] = True
    return net, buffer, vp_adj_last, ev_adj_last


def test_ppo_update_changes_parameters_and_reports_stats():
    torch.manual_seed(0)
    net, buffer, vp_adj, ev_adj = collect_buffer()
    optimizer = torch.optim.Adam(net.parameters(), lr=1e-3)
    before = [p.detach().clone() for p in net.parameters()]
    gen = torch.Generator().manual_seed(1)
    stats = ppo_update(net, optimizer, vp_adj, ev_adj, buffer,
                       PpoConfig(minibatch_size=16), gen)
    assert set(stats) == {"policy_loss", "value_loss", "entropy",
                          "clip_fraction"}
    assert all(np.isfinite(v) for v in stats.values())
    assert any(not torch.equal(a, b)
               for a, b in zip(before, net.parameters()))


def test_ppo_update_is_deterministic():
    results = []
    for _ in range(2):
        torch.manual_seed(0)
        net, buffer, vp_adj, ev_adj = collect_buffer()
        optimizer = torch.optim.Adam(net.parameters(), lr=1e-3)
        gen = torch.Generator().manual_seed(1)
        ppo_update(net, optimizer, vp_adj, ev_adj, buffer,
                   PpoConfig(minibatch_size=16), gen)
        results.append([p.detach().clone() for p in net.parameters()])
    assert all(torch.equal(a, b) for a, b in zip(*results))


def test_ppo_update_empty_buffer_raises():
    net = StubNet(torch.zeros(1, NUM_ACTIONS), torch.zeros(1))
    with pytest.raises(ValueError):
        ppo_update(net, torch.optim.Adam([torch.nn.Parameter(torch.zeros(1))]),
                   None, None, RolloutBuffer(), PpoConfig(),
                   torch.Generator())


# ----------------------------------------------------------------------
# gradient checks (finite differences in float64)
# ----------------------------------------------------------------------

def test_gradcheck_gcn_layer():
    from vertisched.learning.nets import GcnLayer
    torch.manual_seed(0)
    layer = GcnLayer(3, 4).double()
    a_hat = torch.rand(5, 5, dtype=torch.float64)
    a_hat = (a_hat + a_hat.T) / 2
    x = torch.randn(5, 3, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(lambda t: layer(t, a_hat), (x,),
                                    eps=1e-6, atol=1e-6)


def test_gradcheck_masked_log_softmax():
    from vertisched.learning.nets import masked_log_softmax
    mask = torch.tensor([True, False, True, True])
    logits = torch.randn(4, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(
        lambda t: masked_log_softmax(t, mask)[mask], (logits,),
        eps=1e-6, atol=1e-6)
