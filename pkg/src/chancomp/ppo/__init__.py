from .env import OBSERVATION_SIZE, CompileEnv, observation_vector, step_reward
from .network import MLP, Adam, RunningNorm
from .agent import (
    TrainSettings,
    PolicyModel,
    Trajectory,
    clipped_surrogate,
    loss_and_gradients,
    compute_gae,
    train,
    compile_target,
    save_checkpoint,
    load_checkpoint,
)
