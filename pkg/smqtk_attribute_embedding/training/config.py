from typing import Any, Dict

from smqtk_core import Configurable

from smqtk_attribute_embedding.exceptions import ConfigError


class LossWeights (Configurable):
    """
    Weights of the global triplet, local triplet and alignment losses in the
    joint objective, and the triplet margin.
    """

    def __init__(self, alpha: float = 1.0, beta: float = 0.1, gamma: float = 0.1,
                 margin: float = 0.2) -> None:
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.margin = float(margin)
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigError(f"Loss weights must be non-negative, got {self.get_config()}")

    @property
    def needs_local_branch(self) -> bool:
        return self.beta > 0 or self.gamma > 0

    def get_config(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "margin": self.margin,
        }


class TrainConfig (Configurable):
    """
    Two-stage schedule.

    Stage 1 trains the global branch (and the attribute table) alone; stage 2
    trains both branches with per-branch learning rates. The learning rate of
    epoch ``e`` (counted from 1) is ``lr * decay ** ((e - 1) // every)``.

    :param epochs_stage1: Stage 1 epochs (also used by baseline training).
    :param epochs_stage2: Stage 2 epochs.
    :param batch_size: Triplets per optimizer step.
    :param triplets_per_epoch: Triplets sampled for each epoch.
    :param lr_global_s1: Stage 1 learning rate.
    :param decay_s1: Stage 1 decay factor.
    :param decay_every_s1: Stage 1 epochs between decays.
    :param lr_global_s2: Stage 2 learning rate of the global group.
    :param lr_local_s2: Stage 2 learning rate of the local group.
    :param decay_s2: Stage 2 decay factor.
    :param decay_every_s2: Stage 2 epochs between decays.
    :param adam_beta1: Adam first-moment decay.
    :param adam_beta2: Adam second-moment decay.
    :param adam_eps: Adam denominator stabilizer.
    :param align_stop_gradient: Detach the global vectors inside the
        alignment loss so only the local branch learns from it.
    :param select_on_validation: Keep the epoch with the best validation
        MAP instead of the last one.
    :param seed: Seed of initialization and triplet sampling.
    """

    def __init__(self, epochs_stage1: int = 8, epochs_stage2: int = 4,
                 batch_size: int = 16, triplets_per_epoch: int = 2000,
                 lr_global_s1: float = 1e-3, decay_s1: float = 0.9,
                 decay_every_s1: int = 3, lr_global_s2: float = 1e-4,
                 lr_local_s2: float = 1e-3, decay_s2: float = 0.95,
                 decay_every_s2: int = 1, adam_beta1: float = 0.9,
                 adam_beta2: float = 0.999, adam_eps: float = 1e-8,
                 align_stop_gradient: bool = False,
                 select_on_validation: bool = False, seed: int = 0) -> None:
        self.epochs_stage1 = int(epochs_stage1)
        self.epochs_stage2 = int(epochs_stage2)
        self.batch_size = int(batch_size)
        self.triplets_per_epoch = int(triplets_per_epoch)
        self.lr_global_s1 = float(lr_global_s1)
        self.decay_s1 = float(decay_s1)
        self.decay_every_s1 = int(decay_every_s1)
        self.lr_global_s2 = float(lr_global_s2)
        self.lr_local_s2 = float(lr_local_s2)
        self.decay_s2 = float(decay_s2)
        self.decay_every_s2 = int(decay_every_s2)
        self.adam_beta1 = float(adam_beta1)
        self.adam_beta2 = float(adam_beta2)
        self.adam_eps = float(adam_eps)
        self.align_stop_gradient = bool(align_stop_gradient)
        self.select_on_validation = bool(select_on_validation)
        self.seed = int(seed)
        counts = (self.epochs_stage1, self.epochs_stage2, self.batch_size,
                  self.triplets_per_epoch, self.decay_every_s1, self.decay_every_s2)
        if min(counts) < 1:
            raise ConfigError("Epoch, batch, triplet and decay-interval counts must be positive")
        if min(self.lr_global_s1, self.lr_global_s2, self.lr_local_s2) < 0:
            raise ConfigError("Learning rates must be non-negative")
        if not (0 < self.decay_s1 <= 1 and 0 < self.decay_s2 <= 1):
            raise ConfigError("Decay factors must be in (0, 1]")

    def get_config(self) -> Dict[str, Any]:
        return {
            "epochs_stage1": self.epochs_stage1,
            "epochs_stage2": self.epochs_stage2,
            "batch_size": self.batch_size,
            "triplets_per_epoch": self.triplets_per_epoch,
            "lr_global_s1": self.lr_global_s1,
            "decay_s1": self.decay_s1,
            "decay_every_s1": self.decay_every_s1,
            "lr_global_s2": self.lr_global_s2,
            "lr_local_s2": self.lr_local_s2,
            "decay_s2": self.decay_s2,
            "decay_every_s2": self.decay_every_s2,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_eps": self.adam_eps,
            "align_stop_gradient": self.align_stop_gradient,
            "select_on_validation": self.select_on_validation,
            "seed": self.seed,
        }

    @classmethod
    def full_scale(cls, seed: int = 0) -> "TrainConfig":
        """
        Full-size schedule: 50 + 20 epochs over 100k triplets with learning
        rates 1e-4 (stage 1) and 1e-5 / 1e-4 (stage 2).
        """
        return cls(epochs_stage1=50, epochs_stage2=20, triplets_per_epoch=100000,
                   lr_global_s1=1e-4, lr_global_s2=1e-5, lr_local_s2=1e-4,
                   seed=seed)


def learning_rate(lr0: float, decay: float, every: int, epoch: int) -> float:
    """
    >>> learning_rate(1.0, 0.5, 3, 4)
    0.5
    """
    return lr0 * decay ** ((epoch - 1) // every)
