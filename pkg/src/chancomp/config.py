"""Flat dotted-key configuration with hard validation.

Config values live in one namespace ("section.key"); every key has a typed,
documented default below.  Values come from (in increasing precedence)
defaults, an optional config file of `key = value` lines, and command-line
overrides.  Unknown keys are hard errors, because a silently ignored typo in
an RL hyperparameter is the classic way to lose a day.

The effective configuration is echoed into every output artifact as
`# key = value` comment lines.
"""

from __future__ import annotations

from pathlib import Path

from .ppo.agent import TrainSettings

__all__ = ["ConfigError", "Config", "DEFAULTS", "PRESETS"]


class ConfigError(ValueError):
    pass


def _int_tuple(text):
    if isinstance(text, tuple):
        return text
    return tuple(int(part) for part in str(text).split(",") if part.strip())


def _bool(text):
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (default, parser, help)
DEFAULTS = {
    "seed": (0, int, "master seed for training and dataset generation"),
    "workers": (1, int, "cap on internal parallelism (benchmark items)"),
    "environment.tolerance": (1e-3, float, "success threshold eps_t on fidelity distance"),
    "environment.max_steps": (16, int, "episode step cap L_max"),
    "environment.success_scale": (10.0, float, "success reward constant c"),
    "environment.t_cost": (0.0, float, "per-use punishment C_T for T gates"),
    "network.hidden": ((64, 64), _int_tuple, "hidden layer sizes, comma separated"),
    "network.normalization": ("obs", str, "obs | batch | none"),
    "optimizer.learning_rate": (3e-4, float, "Adam step size"),
    "optimizer.gamma": (0.99, float, "reward discount"),
    "optimizer.gae_lambda": (0.95, float, "GAE lambda"),
    "optimizer.clip_start": (0.2, float, "initial PPO clip range"),
    "optimizer.clip_final": (0.05, float, "final PPO clip range (linear decay)"),
    "optimizer.epochs": (4, int, "optimization epochs per update"),
    "optimizer.minibatch": (128, int, "minibatch size"),
    "optimizer.entropy_coef": (0.01, float, "entropy bonus coefficient"),
    "optimizer.value_coef": (0.5, float, "value MSE coefficient"),
    "optimizer.max_grad_norm": (0.5, float, "global gradient norm clip"),
    "optimizer.normalize_advantages": (True, _bool, "per-batch advantage standardization"),
    "curriculum.start_length": (2, int, "initial target generator length"),
    "curriculum.increment": (1, int, "length increase per advancement"),
    "curriculum.cap": (8, int, "maximum curriculum length"),
    "curriculum.threshold_factor": (0.8, float,
                                    "advance when rolling reward >= factor * c"),
    "train.updates": (300, int, "number of PPO updates"),
    "train.horizon": (1024, int, "environment steps collected per update"),
    "train.checkpoint_every": (100, int, "updates between checkpoints"),
    "decomposer.epsilon": (0.35, float, "channel decomposition accuracy"),
    "sk.depth": (6, int, "epsilon-net depth"),
    "sk.level": (2, int, "Solovay-Kitaev recursion level"),
    "bench.seed": (2024, int, "dataset seed"),
    "bench.count": (100, int, "dataset size"),
    "bench.min_len": (10, int, "minimum target generator length"),
    "bench.max_len": (80, int, "maximum target generator length"),
    "bench.eps_t": (1e-3, float, "benchmark success threshold"),
    "bench.retries": (8, int, "stochastic retries for the PPO compiler"),
    "io.out_dir": ("artifacts", str, "output directory"),
    "io.cache_dir": ("artifacts/netcache", str, "epsilon-net cache directory"),
}

# Named presets applied before file/flag overrides.
PRESETS = {
    "smoke": {},
    "paper": {
        "network.hidden": "256,256,256,256,256",
        "network.normalization": "batch",
        "environment.max_steps": 130,
        "curriculum.start_length": 10,
        "curriculum.cap": 80,
        "train.updates": 20000,
        "train.horizon": 2048,
        "bench.count": 1500,
    },
}


class Config:
    def __init__(self, file=None, overrides=(), preset=None):
        self._values = {key: default for key, (default, _, _) in DEFAULTS.items()}
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            for key, value in PRESETS[preset].items():
                self._set(key, value)
        if file is not None:
            self._load_file(file)
        for key, value in overrides:
            self._set(key, value)

    def _set(self, key, value):
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        _, parser, _ = DEFAULTS[key]
        try:
            self._values[key] = parser(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc

    def _load_file(self, path):
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        for lineno, raw in enumerate(path.read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            self._set(key, value)

    def __getitem__(self, key):
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def echo_lines(self):
        """Sorted `# key = value` lines embedded into output artifacts."""
        lines = []
        for key in sorted(self._values):
            value = self._values[key]
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"# {key} = {value}")
        return lines

    def train_settings(self) -> TrainSettings:
        return TrainSettings(
            tolerance=self["environment.tolerance"],
            max_steps=self["environment.max_steps"],
            success_scale=self["environment.success_scale"],
            t_cost=self["environment.t_cost"],
            hidden=self["network.hidden"],
            normalization=self["network.normalization"],
            learning_rate=self["optimizer.learning_rate"],
            gamma=self["optimizer.gamma"],
            gae_lambda=self["optimizer.gae_lambda"],
            clip_start=self["optimizer.clip_start"],
            clip_final=self["optimizer.clip_final"],
            epochs=self["optimizer.epochs"],
            minibatch=self["optimizer.minibatch"],
            entropy_coef=self["optimizer.entropy_coef"],
            value_coef=self["optimizer.value_coef"],
            max_grad_norm=self["optimizer.max_grad_norm"],
            normalize_advantages=self["optimizer.normalize_advantages"],
            start_length=self["curriculum.start_length"],
            increment=self["curriculum.increment"],
            cap=self["curriculum.cap"],
            threshold_factor=self["curriculum.threshold_factor"],
            updates=self["train.updates"],
            horizon=self["train.horizon"],
            checkpoint_every=self["train.checkpoint_every"],
            seed=self["seed"],
        )
