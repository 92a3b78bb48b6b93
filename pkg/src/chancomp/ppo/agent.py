"""PPO training and inference for the braid+T compiler.

Collect-then-update loop: a fixed horizon of environment steps per update,
generalized advantage estimation, several epochs of minibatch Adam steps on
the combined loss

    L = -J_clip + value_coef * MSE(value, return) - entropy_coef * entropy,

with the clip range decaying linearly over training.  Targets come from a
curriculum: random generator sequences whose length starts small and grows
whenever the rolling mean episode reward crosses a threshold.

Everything is driven by one seeded numpy Generator, so a (settings, seed)
pair reproduces training bit-for-bit, including the CSV log.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from ..gates import GATE_IDS, GateSequence, evaluate, random_sequence
from ..linalg import fidelity_distance
from .env import OBSERVATION_SIZE, CompileEnv, observation_vector
from .network import MLP, Adam, RunningNorm, softmax

__all__ = [
    "TrainSettings",
    "PolicyModel",
    "Trajectory",
    "clipped_surrogate",
    "loss_and_gradients",
    "compute_gae",
    "train",
    "compile_target",
    "save_checkpoint",
    "load_checkpoint",
    "LOG_COLUMNS",
]

LOG_COLUMNS = [
    "update", "mean_reward", "mean_distance", "success_rate", "t_rate",
    "curriculum_length", "kl", "clip_fraction",
]

_T_ACTION_IDX = np.array([g in ("T", "T'") for g in GATE_IDS])


@dataclass
class TrainSettings:
    """Every knob of the training run; defaults give the smoke preset."""

    # environment (reward scale c, T cost, tolerance eps_t, step cap L_max)
    tolerance: float = 1e-3
    max_steps: int = 16
    success_scale: float = 10.0
    t_cost: float = 0.0
    # network
    hidden: tuple = (64, 64)
    normalization: str = "obs"  # obs | batch | none
    # optimizer / PPO
    learning_rate: float = 3e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_start: float = 0.2
    clip_final: float = 0.05
    epochs: int = 4
    minibatch: int = 128
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    normalize_advantages: bool = True
    # curriculum
    start_length: int = 1
    increment: int = 1
    cap: int = 8
    threshold_factor: float = 0.8
    # run shape
    updates: int = 300
    horizon: int = 1024
    checkpoint_every: int = 100
    seed: int = 0

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class PolicyModel:
    """Network + optimizer + normalization state + curriculum position."""

    settings: TrainSettings
    net: MLP
    opt: Adam
    obs_norm: RunningNorm
    update_index: int = 0
    curriculum_length: int = 0
    rng: np.random.Generator = field(default=None, repr=False)

    @classmethod
    def fresh(cls, settings: TrainSettings) -> "PolicyModel":
        rng = np.random.default_rng(settings.seed)
        net = MLP(
            OBSERVATION_SIZE,
            settings.hidden,
            batch_norm=(settings.normalization == "batch"),
            rng=rng,
        )
        opt = Adam(net.parameters(), lr=settings.learning_rate,
                   max_grad_norm=settings.max_grad_norm)
        return cls(
            settings=settings,
            net=net,
            opt=opt,
            obs_norm=RunningNorm(OBSERVATION_SIZE),
            curriculum_length=settings.start_length,
            rng=rng,
        )

    def prepare(self, obs: np.ndarray) -> np.ndarray:
        if self.settings.normalization == "obs":
            return self.obs_norm.normalize(obs)
        return obs

    def policy(self, obs: np.ndarray):
        """Action probabilities and value for one raw observation."""
        probs, value, _ = self.net.forward(self.prepare(obs), train=False)
        return probs[0], value[0]


@dataclass
class Trajectory:
    """Flat per-step rollout records plus advantage/return results."""

    observations: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    old_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    # reward-reconstruction metadata
    step_indices: np.ndarray
    distances: np.ndarray
    action_was_t: np.ndarray
    gen_lengths: np.ndarray
    advantages: np.ndarray = None
    returns: np.ndarray = None


def clipped_surrogate(ratio: float, advantage: float, eps_clip: float) -> float:
    """min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)."""
    if eps_clip <= 0:
        raise ValueError("eps_clip must be positive")
    clipped = min(max(ratio, 1.0 - eps_clip), 1.0 + eps_clip)
    return min(ratio * advantage, clipped * advantage)


def compute_gae(rewards, values, dones, last_value, gamma, lam):
    """Generalized advantage estimation over a horizon with episode breaks."""
    n = len(rewards)
    advantages = np.zeros(n)
    gae = 0.0
    for i in range(n - 1, -1, -1):
        next_value = last_value if i == n - 1 else values[i + 1]
        not_done = 0.0 if dones[i] else 1.0
        delta = rewards[i] + gamma * next_value * not_done - values[i]
        gae = delta + gamma * lam * not_done * gae
        advantages[i] = gae
    return advantages, advantages + values


def loss_and_gradients(net: MLP, obs, actions, old_log_probs, advantages,
                       returns, eps_clip, value_coef, entropy_coef):
    """Combined PPO loss and its analytic parameter gradients.

    Returns (loss, grads, stats) where stats carries the approximate KL and
    the clip fraction of the minibatch.
    """
    probs, values, cache = net.forward(obs, train=True)
    batch = obs.shape[0]
    idx = np.arange(batch)

    log_probs = np.log(probs[idx, actions] + 1e-12)
    ratio = np.exp(log_probs - old_log_probs)

    # Branch-active mask of the min{} in the clipped surrogate.
    unclipped_active = np.where(
        advantages >= 0, ratio <= 1.0 + eps_clip, ratio >= 1.0 - eps_clip
    )
    surrogate = np.minimum(
        ratio * advantages,
        np.clip(ratio, 1.0 - eps_clip, 1.0 + eps_clip) * advantages,
    )
    entropy = -np.sum(probs * np.log(probs + 1e-12), axis=1)
    value_err = values - returns

    loss = (
        -np.mean(surrogate)
        + value_coef * np.mean(value_err**2)
        - entropy_coef * np.mean(entropy)
    )

    # d(-J_clip)/dlogits: gradient flows only through the unclipped branch.
    d_lp = -(unclipped_active * ratio * advantages) / batch
    one_hot = np.zeros_like(probs)
    one_hot[idx, actions] = 1.0
    d_logits = d_lp[:, None] * (one_hot - probs)
    # d(-entropy_coef * H)/dlogits
    d_logits += entropy_coef / batch * probs * (np.log(probs + 1e-12) + entropy[:, None])
    d_value = 2.0 * value_coef * value_err / batch

    grads = net.backward(cache, d_logits, d_value)
    stats = {
        "approx_kl": float(np.mean(old_log_probs - log_probs)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > eps_clip)),
        "value_loss": float(np.mean(value_err**2)),
        "entropy": float(np.mean(entropy)),
    }
    return loss, grads, stats


def _sample_target(model: PolicyModel):
    length = model.curriculum_length
    seq = random_sequence(length, model.rng)
    return evaluate(seq), length


def _rolling(values, window=100):
    tail = values[-window:]
    return float(np.mean(tail)) if tail else 0.0


def train(settings: TrainSettings, out_dir, resume_from=None, log_name="train_log.csv"):
    """Run PPO training; writes an append-only CSV log and checkpoints.

    Returns (model, log_path, checkpoint_path).  Bit-reproducible for fixed
    (settings, seed); resuming continues the log from the stored update index.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / log_name
    ckpt_path = out_dir / "checkpoint.npz"

    if resume_from is not None:
        model = load_checkpoint(resume_from, settings)
    else:
        model = PolicyModel.fresh(settings)
        with open(log_path, "w", newline="") as fh:
            csv.writer(fh).writerow(LOG_COLUMNS)

    ep_rewards, ep_distances, ep_success, ep_trate = [], [], [], []

    target, gen_len = _sample_target(model)
    env = CompileEnv(
        target=target, target_gen_length=gen_len,
        max_steps=settings.max_steps, tolerance=settings.tolerance,
        success_scale=settings.success_scale, t_cost=settings.t_cost,
    )
    episode_reward = 0.0

    start = model.update_index
    for update in range(start, settings.updates):
        frac = update / max(settings.updates - 1, 1)
        eps_clip = settings.clip_start + frac * (settings.clip_final - settings.clip_start)

        traj = _collect(model, env, settings)
        # episodes that finished during collection
        for record in traj.episode_records:
            ep_rewards.append(record["reward"])
            ep_distances.append(record["distance"])
            ep_success.append(record["success"])
            ep_trate.append(record["t_rate"])
            if (
                len(ep_rewards) >= 20
                and _rolling(ep_rewards) >= settings.threshold_factor * settings.success_scale
                and model.curriculum_length < settings.cap
            ):
                model.curriculum_length = min(
                    model.curriculum_length + settings.increment, settings.cap
                )
                ep_rewards.clear()  # fresh gate for the longer targets

        stats = _update(model, traj, eps_clip, settings)
        model.update_index = update + 1

        with open(log_path, "a", newline="") as fh:
            csv.writer(fh).writerow([
                update,
                f"{_rolling(ep_rewards):.6f}",
                f"{_rolling(ep_distances):.6f}",
                f"{_rolling(ep_success):.6f}",
                f"{_rolling(ep_trate):.6f}",
                model.curriculum_length,
                f"{stats['approx_kl']:.6g}",
                f"{stats['clip_fraction']:.6f}",
            ])
        if (update + 1) % settings.checkpoint_every == 0 or update + 1 == settings.updates:
            save_checkpoint(model, ckpt_path)
    return model, log_path, ckpt_path


def _collect(model: PolicyModel, env: CompileEnv, settings: TrainSettings):
    horizon = settings.horizon
    obs_buf = np.empty((horizon, OBSERVATION_SIZE))
    act_buf = np.empty(horizon, dtype=int)
    logp_buf = np.empty(horizon)
    probs_buf = np.empty((horizon, len(GATE_IDS)))
    rew_buf = np.empty(horizon)
    val_buf = np.empty(horizon)
    done_buf = np.empty(horizon, dtype=bool)
    nstep_buf = np.empty(horizon, dtype=int)
    dist_buf = np.empty(horizon)
    wast_buf = np.empty(horizon, dtype=bool)
    glen_buf = np.empty(horizon, dtype=int)
    episode_records = []

    raw_obs = env.observation()
    episode_reward = getattr(env, "_partial_reward", 0.0)
    for i in range(horizon):
        probs, value = model.policy(raw_obs)
        action_idx = int(model.rng.choice(len(GATE_IDS), p=probs))
        action = GATE_IDS[action_idx]

        obs_buf[i] = raw_obs
        act_buf[i] = action_idx
        logp_buf[i] = np.log(probs[action_idx] + 1e-12)
        probs_buf[i] = probs
        val_buf[i] = value
        glen_buf[i] = env.target_gen_length

        raw_obs, reward, done = env.step(action)
        episode_reward += reward
        rew_buf[i] = reward
        done_buf[i] = done
        nstep_buf[i] = env.step_index
        dist_buf[i] = env.distance
        wast_buf[i] = action in ("T", "T'")

        if done:
            n_actions = len(env.actions)
            episode_records.append({
                "reward": episode_reward,
                "distance": env.distance,
                "success": float(env.success),
                "t_rate": (sum(a in ("T", "T'") for a in env.actions) / n_actions
                           if n_actions else 0.0),
            })
            target, gen_len = _sample_target(model)
            env.target = target
            env.target_gen_length = gen_len
            raw_obs = env.reset()
            episode_reward = 0.0
    env._partial_reward = episode_reward

    if model.settings.normalization == "obs":
        model.obs_norm.update(obs_buf)

    _, last_value, _ = model.net.forward(model.prepare(raw_obs), train=False)
    adv, ret = compute_gae(
        rew_buf, val_buf, done_buf, float(last_value[0]),
        settings.gamma, settings.gae_lambda,
    )
    traj = Trajectory(
        observations=obs_buf, actions=act_buf, log_probs=logp_buf,
        old_probs=probs_buf, rewards=rew_buf, values=val_buf, dones=done_buf,
        step_indices=nstep_buf, distances=dist_buf, action_was_t=wast_buf,
        gen_lengths=glen_buf, advantages=adv, returns=ret,
    )
    traj.episode_records = episode_records
    return traj


def _update(model: PolicyModel, traj: Trajectory, eps_clip, settings: TrainSettings):
    n = len(traj.rewards)
    obs = model.prepare(traj.observations)
    advantages = traj.advantages
    if settings.normalize_advantages:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

    last_stats = None
    for _ in range(settings.epochs):
        order = model.rng.permutation(n)
        for lo in range(0, n, settings.minibatch):
            sel = order[lo : lo + settings.minibatch]
            _, grads, stats = loss_and_gradients(
                model.net, obs[sel], traj.actions[sel], traj.log_probs[sel],
                advantages[sel], traj.returns[sel], eps_clip,
                settings.value_coef, settings.entropy_coef,
            )
            model.opt.step(model.net.parameters(), grads)
            last_stats = stats

    # Exact KL of the update batch, old vs new policy.
    new_probs, _, _ = model.net.forward(obs, train=False)
    old = traj.old_probs
    kl = float(np.mean(np.sum(old * (np.log(old + 1e-12) - np.log(new_probs + 1e-12)),
                              axis=1)))
    if not np.isfinite(kl):
        raise FloatingPointError("KL diverged; policy update is unsafe")
    last_stats["approx_kl"] = kl
    return last_stats


def compile_target(model: PolicyModel, target: np.ndarray, tolerance: float = None,
                   max_steps: int = None, retries: int = 0, rng=None):
    """Depth-first compilation: greedy rollout, then stochastic retries.

    Returns (GateSequence, achieved_distance, success).  Failure is a
    reported outcome, not an error.
    """
    settings = model.settings
    tolerance = settings.tolerance if tolerance is None else tolerance
    max_steps = settings.max_steps if max_steps is None else max_steps
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng

    best = None
    for attempt in range(retries + 1):
        env = CompileEnv(target=target, target_gen_length=max_steps,
                         max_steps=max_steps, tolerance=tolerance,
                         success_scale=settings.success_scale, t_cost=settings.t_cost)
        obs = env.observation()
        done = env.done
        while not done:
            probs, _ = model.policy(obs)
            if attempt == 0:
                action_idx = int(np.argmax(probs))
            else:
                action_idx = int(rng.choice(len(GATE_IDS), p=probs))
            obs, _, done = env.step(GATE_IDS[action_idx])
        candidate = (env.sequence(), env.distance, env.success)
        if best is None or candidate[1] < best[1]:
            best = candidate
        if best[2]:
            break
    return best


_CHECKPOINT_VERSION = 1


def save_checkpoint(model: PolicyModel, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {
        "version": np.array([_CHECKPOINT_VERSION]),
        "config_hash": np.array([model.settings.config_hash()]),
        "settings_json": np.array([json.dumps(asdict(model.settings), default=list)]),
        "update_index": np.array([model.update_index]),
        "curriculum_length": np.array([model.curriculum_length]),
        "rng_state": np.array([json.dumps(model.rng.bit_generator.state)]),
    }
    arrays.update(model.net.state_arrays())
    arrays.update(model.opt.state_arrays())
    for key, val in model.obs_norm.state().items():
        arrays[f"obsnorm_{key}"] = val
    np.savez(path, **arrays)


def load_checkpoint(path, settings: TrainSettings = None, force: bool = False) -> PolicyModel:
    """Load a checkpoint; refuses config-hash mismatches unless forced."""
    data = np.load(Path(path), allow_pickle=False)
    if int(data["version"][0]) != _CHECKPOINT_VERSION:
        raise ValueError("unsupported checkpoint version")
    stored = TrainSettings(**json.loads(str(data["settings_json"][0])))
    stored.hidden = tuple(stored.hidden)
    if settings is not None and settings.config_hash() != stored.config_hash():
        if not force:
            raise ValueError(
                "checkpoint config hash mismatch "
                f"({stored.config_hash()} stored vs {settings.config_hash()} requested); "
                "pass force to override"
            )
        stored = settings
    model = PolicyModel.fresh(stored)
    model.net.load_state_arrays(data)
    model.opt.load_state_arrays(data)
    model.obs_norm = RunningNorm.from_state(
        OBSERVATION_SIZE,
        {k.replace("obsnorm_", ""): data[k] for k in data.files if k.startswith("obsnorm_")},
    )
    model.update_index = int(data["update_index"][0])
    model.curriculum_length = int(data["curriculum_length"][0])
    model.rng.bit_generator.state = json.loads(str(data["rng_state"][0]))
    return model
