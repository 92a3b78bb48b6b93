"""MLP policy/value network with hand-derived backprop and Adam.

One shared trunk of fully connected layers with leaky-ReLU activations feeds
a 6-logit policy head and a scalar value head.  No autodiff: forward caches
pre-activations and the backward pass applies the chain rule explicitly, so
gradients are checkable against finite differences.

Two normalization modes: "obs" standardizes inputs with running statistics
(treated as fixed preprocessing, no gradient), while "batch" inserts batch
normalization after every hidden affine layer (minibatch statistics during
updates, running statistics during rollouts).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["MLP", "Adam", "RunningNorm", "leaky_relu", "softmax"]

_LEAK = 0.01
_BN_EPS = 1e-5
_BN_MOMENTUM = 0.9


def leaky_relu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, _LEAK * z)


def _leaky_relu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, _LEAK)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


@dataclass
class RunningNorm:
    """Running mean/variance standardizer (Welford over batches)."""

    size: int
    count: float = 1e-4
    mean: np.ndarray = None
    m2: np.ndarray = None

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.size)
        if self.m2 is None:
            self.m2 = np.ones(self.size) * 1e-4

    def update(self, batch: np.ndarray) -> None:
        batch = np.atleast_2d(batch)
        n = batch.shape[0]
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        delta = b_mean - self.mean
        total = self.count + n
        self.mean = self.mean + delta * n / total
        self.m2 = self.m2 + b_var * n + delta**2 * self.count * n / total
        self.count = total

    @property
    def var(self) -> np.ndarray:
        return self.m2 / self.count

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / np.sqrt(self.var + 1e-8)

    def state(self) -> dict:
        return {"count": np.array([self.count]), "mean": self.mean, "m2": self.m2}

    @classmethod
    def from_state(cls, size: int, state: dict) -> "RunningNorm":
        return cls(size=size, count=float(state["count"][0]),
                   mean=np.array(state["mean"]), m2=np.array(state["m2"]))


class MLP:
    """Shared-trunk policy/value network over flat observations."""

    def __init__(self, input_size: int, hidden_sizes, n_actions: int = 6,
                 batch_norm: bool = False, rng: np.random.Generator = None):
        rng = rng or np.random.default_rng(0)
        self.input_size = input_size
        self.hidden_sizes = list(hidden_sizes)
        self.n_actions = n_actions
        self.batch_norm = batch_norm

        self.weights = []
        self.biases = []
        prev = input_size
        for h in self.hidden_sizes:
            # He-style scaling suits the rectifier trunk.
            self.weights.append(rng.normal(0.0, np.sqrt(2.0 / prev), size=(h, prev)))
            self.biases.append(np.zeros(h))
            prev = h
        # Zero heads: uniform policy and zero value at initialization.
        self.policy_w = np.zeros((n_actions, prev))
        self.policy_b = np.zeros(n_actions)
        self.value_w = np.zeros((1, prev))
        self.value_b = np.zeros(1)

        if batch_norm:
            self.bn_gamma = [np.ones(h) for h in self.hidden_sizes]
            self.bn_beta = [np.zeros(h) for h in self.hidden_sizes]
            self.bn_mean = [np.zeros(h) for h in self.hidden_sizes]
            self.bn_var = [np.ones(h) for h in self.hidden_sizes]

    # -- parameter plumbing ------------------------------------------------

    def parameters(self):
        """Flat list of parameter arrays, in a fixed documented order."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        if self.batch_norm:
            for g, b in zip(self.bn_gamma, self.bn_beta):
                params.extend([g, b])
        params.extend([self.policy_w, self.policy_b, self.value_w, self.value_b])
        return params

    def set_parameters(self, values) -> None:
        for target, value in zip(self.parameters(), values):
            target[...] = value

    # -- forward -----------------------------------------------------------

    def forward(self, x: np.ndarray, train: bool = False):
        """Probabilities, values, and the cache needed for backward.

        x: (B, input_size).  train=True uses minibatch statistics in batch
        norm layers (and records what backward needs); train=False uses the
        running statistics and suits single-observation rollouts.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cache = {"x": x, "z": [], "a": [], "bn": []}
        act = x
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = act @ w.T + b
            if self.batch_norm:
                z, bn_cache = self._bn_forward(i, z, train)
                cache["bn"].append(bn_cache)
            cache["z"].append(z)
            act = leaky_relu(z)
            cache["a"].append(act)
        logits = act @ self.policy_w.T + self.policy_b
        value = (act @ self.value_w.T + self.value_b)[:, 0]
        probs = softmax(logits)
        cache["probs"] = probs
        return probs, value, cache

    def _bn_forward(self, i: int, z: np.ndarray, train: bool):
        if train and z.shape[0] > 1:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            self.bn_mean[i] = _BN_MOMENTUM * self.bn_mean[i] + (1 - _BN_MOMENTUM) * mu
            self.bn_var[i] = _BN_MOMENTUM * self.bn_var[i] + (1 - _BN_MOMENTUM) * var
        else:
            mu = self.bn_mean[i]
            var = self.bn_var[i]
        inv_std = 1.0 / np.sqrt(var + _BN_EPS)
        z_hat = (z - mu) * inv_std
        out = self.bn_gamma[i] * z_hat + self.bn_beta[i]
        return out, {"z_hat": z_hat, "inv_std": inv_std, "batch_stats": train and z.shape[0] > 1}

    # -- backward ----------------------------------------------------------

    def backward(self, cache, d_logits: np.ndarray, d_value: np.ndarray):
        """Gradients for every parameter given head gradients.

        d_logits: (B, n_actions) gradient of the loss wrt the policy logits;
        d_value: (B,) gradient wrt the value output.  Returns a list aligned
        with parameters().
        """
        act_last = cache["a"][-1] if cache["a"] else cache["x"]
        d_policy_w = d_logits.T @ act_last
        d_policy_b = d_logits.sum(axis=0)
        d_value_w = d_value[None, :] @ act_last
        d_value_b = np.array([d_value.sum()])

        d_act = d_logits @ self.policy_w + d_value[:, None] @ self.value_w

        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        grads_bn = [None] * len(self.weights) if self.batch_norm else None

        for i in range(len(self.weights) - 1, -1, -1):
            z = cache["z"][i]
            d_z = d_act * _leaky_relu_grad(z)
            if self.batch_norm:
                d_z, d_gamma, d_beta = self._bn_backward(i, cache["bn"][i], d_z)
                grads_bn[i] = (d_gamma, d_beta)
            prev_act = cache["a"][i - 1] if i > 0 else cache["x"]
            grads_w[i] = d_z.T @ prev_act
            grads_b[i] = d_z.sum(axis=0)
            d_act = d_z @ self.weights[i]

        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.extend([gw, gb])
        if self.batch_norm:
            for g_gamma, g_beta in grads_bn:
                grads.extend([g_gamma, g_beta])
        grads.extend([d_policy_w, d_policy_b, d_value_w, d_value_b])
        return grads

    def _bn_backward(self, i: int, bn_cache, d_out: np.ndarray):
        z_hat = bn_cache["z_hat"]
        inv_std = bn_cache["inv_std"]
        d_gamma = (d_out * z_hat).sum(axis=0)
        d_beta = d_out.sum(axis=0)
        d_zhat = d_out * self.bn_gamma[i]
        if bn_cache["batch_stats"]:
            n = d_out.shape[0]
            d_z = (inv_std / n) * (
                n * d_zhat
                - d_zhat.sum(axis=0)
                - z_hat * (d_zhat * z_hat).sum(axis=0)
            )
        else:
            d_z = d_zhat * inv_std
        return d_z, d_gamma, d_beta

    # -- persistence ---------------------------------------------------------

    def state_arrays(self) -> dict:
        arrays = {}
        for idx, p in enumerate(self.parameters()):
            arrays[f"param_{idx}"] = p
        if self.batch_norm:
            for i in range(len(self.hidden_sizes)):
                arrays[f"bn_mean_{i}"] = self.bn_mean[i]
                arrays[f"bn_var_{i}"] = self.bn_var[i]
        return arrays

    def load_state_arrays(self, arrays: dict) -> None:
        self.set_parameters(
            [arrays[f"param_{idx}"] for idx in range(len(self.parameters()))]
        )
        if self.batch_norm:
            for i in range(len(self.hidden_sizes)):
                self.bn_mean[i] = np.array(arrays[f"bn_mean_{i}"])
                self.bn_var[i] = np.array(arrays[f"bn_var_{i}"])


class Adam:
    """Adam over a parameter list, with bias correction and optional clipping."""

    def __init__(self, params, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, max_grad_norm: float = 0.5):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.max_grad_norm = max_grad_norm
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.step_count = 0

    def step(self, params, grads, lr: float = None) -> None:
        lr = self.lr if lr is None else lr
        if self.max_grad_norm is not None:
            total = np.sqrt(sum(float(np.sum(g**2)) for g in grads))
            if total > self.max_grad_norm:
                scale = self.max_grad_norm / (total + 1e-12)
                grads = [g * scale for g in grads]
        self.step_count += 1
        b1c = 1.0 - self.beta1**self.step_count
        b2c = 1.0 - self.beta2**self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g**2
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def state_arrays(self) -> dict:
        arrays = {"adam_step": np.array([self.step_count])}
        for idx, (m, v) in enumerate(zip(self.m, self.v)):
            arrays[f"adam_m_{idx}"] = m
            arrays[f"adam_v_{idx}"] = v
        return arrays

    def load_state_arrays(self, arrays: dict) -> None:
        self.step_count = int(arrays["adam_step"][0])
        for idx in range(len(self.m)):
            self.m[idx] = np.array(arrays[f"adam_m_{idx}"])
            self.v[idx] = np.array(arrays[f"adam_v_{idx}"])
