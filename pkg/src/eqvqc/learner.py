"""Training embeddings toward equivariance with SPSA gradient descent."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from eqvqc.circuits import CircuitSpec
from eqvqc.experiments import ExperimentSpec

log = logging.getLogger(__name__)


IDENTITY = "e"


class NonFiniteLossError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    experiment: str = "c2"
    epochs: int = 150
    batch_size: int = 100
    learning_rate: float = 0.1
    spsa_c0: float = 0.1
    spsa_gamma: float = 0.101
    seed: int = 0
    train_size: int = 100
    val_size: int = 100
    init_low: float = 0.0
    init_high: float = 2 * math.pi

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.train_size, self.val_size) < 1:
            raise ValueError("epochs, batch_size, train_size and val_size must be >= 1")
        if not self.init_high > self.init_low:
            raise ValueError("init_high must exceed init_low")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not self.spsa_c0 > 0:
            raise ValueError("spsa_c0 must be > 0")
        if self.spsa_gamma < 0:
            raise ValueError("spsa_gamma must be >= 0")

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(values) - set(known)
        if unknown:
            raise ValueError(f"unknown training keys: {', '.join(sorted(unknown))}")
        casts = {f.name: type(f.default) for f in fields(cls)}
        return cls(**{k: casts[k](v) for k, v in values.items()})


@dataclass
class TrainRecord:
    config: dict
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    params: list[np.ndarray] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    initial_params: np.ndarray | None = None
    initial_val_loss: float = math.nan

    @property
    def final_params(self) -> np.ndarray:
        return self.params[-1]

    def summary(self) -> dict:
        return {
            "config": self.config,
            "seed": self.config["seed"],
            "initial_params": [float(t) for t in self.initial_params],
            "final_params": [float(t) for t in self.final_params],
            "initial_val_loss": self.initial_val_loss,
            "final_train_loss": self.train_loss[-1],
            "final_val_loss": self.val_loss[-1],
        }


# -- losses -------------------------------------------------------------------------


def equivariance_gaps(spec: CircuitSpec, theta, gens, x, action) -> np.ndarray:
    """``h(V(g)x) - h(x)`` for each pair; both halves go through one batched evaluation.

    The label ``"e"`` stands for the identity element.
    """
    x = np.asarray(x)
    moved = x.copy()
    gens = np.asarray(gens)
    for label in np.unique(gens):
        if label == IDENTITY:
            continue
        sel = gens == label
        moved[sel] = action(str(label), x[sel])
    both = spec.estimate_batch(theta, np.concatenate([moved, x]))
    return both[: len(x)] - both[len(x) :]


def equivariance_loss(spec: CircuitSpec, theta, g: str | None, x, action) -> float:
    """``(h(V(g)x) - h(x))**2`` for one generator (``None`` or ``"e"`` = identity) and one point."""
    if g is None or g == IDENTITY:
        return 0.0
    gap = equivariance_gaps(spec, theta, [g], np.asarray(x)[None], action)[0]
    return float(gap**2)


def batch_loss(spec: CircuitSpec, theta, batch, action) -> float:
    """Mean equivariance loss over a batch given as ``(gens, xs)``."""
    gens, xs = batch
    if len(gens) == 0:
        raise ValueError("empty batch")
    return float(np.mean(equivariance_gaps(spec, theta, gens, xs, action) ** 2))


def mse_loss(spec: CircuitSpec, theta, xs, targets) -> float:
    return float(np.mean((spec.estimate_batch(theta, xs) - targets) ** 2))


# -- SPSA ---------------------------------------------------------------------------------


def spsa_gradient(
    loss: Callable[[np.ndarray], float],
    theta,
    k: int,
    rng: np.random.Generator,
    c0: float = 0.1,
    gamma: float = 0.101,
) -> np.ndarray:
    """Two-evaluation SPSA estimate with Rademacher perturbations.

    ``c_k = c0 / (k + 1)**gamma`` and
    ``g_i = (L(theta + c_k D) - L(theta - c_k D)) / (2 c_k D_i)``.
    """
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    theta = np.asarray(theta, dtype=float)
    ck = c0 / (k + 1) ** gamma
    delta = rng.choice(np.array([-1.0, 1.0]), size=theta.shape)
    diff = loss(theta + ck * delta) - loss(theta - ck * delta)
    return diff / (2 * ck * delta)


# -- training ---------------------------------------------------------------------------


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("init", "batch", "spsa", "val")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(ss) for name, ss in zip(names, children)}


def sample_pairs(experiment: ExperimentSpec, n: int, rng: np.random.Generator):
    """``n`` (generator, data) pairs, generators uniform over the generating set."""
    gens = np.asarray(experiment.generators)[rng.integers(0, len(experiment.generators), size=n)]
    return gens, experiment.sampler(n, rng)


def validation_pairs(experiment: ExperimentSpec, n: int, rng: np.random.Generator):
    """Held-out pairs with every generator used equally often."""
    gens = np.resize(np.asarray(experiment.generators), n)
    return gens, experiment.sampler(n, rng)


def make_objective(experiment: ExperimentSpec, batch) -> Callable[[np.ndarray], float]:
    spec = experiment.circuit
    if experiment.task == "classification":
        xs, targets = batch
        return lambda th: mse_loss(spec, th, xs, targets)
    return lambda th: batch_loss(spec, th, batch, experiment.action)


def _draw_batch(experiment: ExperimentSpec, n: int, rng, validation: bool = False):
    if experiment.task == "classification":
        xs = experiment.sampler(n, rng)
        return xs, experiment.labeler(xs).astype(float)
    return (validation_pairs if validation else sample_pairs)(experiment, n, rng)


def _finite(value: float, what: str, epoch: int) -> float:
    if not math.isfinite(value):
        raise NonFiniteLossError(f"{what} became non-finite ({value}) at epoch {epoch}")
    return value


def _take(batch, idx):
    return tuple(np.asarray(part)[idx] for part in batch)


def train(config: TrainConfig, experiment: ExperimentSpec, theta0=None) -> TrainRecord:
    """Vanilla gradient descent on SPSA gradients.

    A training set of ``train_size`` points is drawn once, reshuffled every
    epoch and cut into batches of ``batch_size``; each batch gives one
    update. The recorded training loss is the mean batch loss at the
    parameters each update started from; validation loss is measured on a
    fixed held-out set after the epoch's updates.
    """
    rngs = _streams(config.seed)
    p = experiment.num_params
    if theta0 is None:
        theta = rngs["init"].uniform(config.init_low, config.init_high, size=p)
    else:
        theta = np.array(theta0, dtype=float)
    if theta.shape != (p,):
        raise ValueError(f"expected {p} initial parameters")
    val_objective = make_objective(experiment, _draw_batch(experiment, config.val_size, rngs["val"], True))
    train_set = _draw_batch(experiment, config.train_size, rngs["batch"])
    record = TrainRecord(config=asdict(config), initial_params=theta.copy())
    record.initial_val_loss = _finite(val_objective(theta), "validation loss", 0)
    k = 0
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        losses = []
        order = rngs["batch"].permutation(config.train_size)
        for lo in range(0, config.train_size, config.batch_size):
            objective = make_objective(experiment, _take(train_set, order[lo : lo + config.batch_size]))
            losses.append(_finite(objective(theta), "training loss", epoch))
            grad = spsa_gradient(objective, theta, k, rngs["spsa"], config.spsa_c0, config.spsa_gamma)
            if not np.all(np.isfinite(grad)):
                raise NonFiniteLossError(f"SPSA gradient became non-finite at epoch {epoch}")
            theta = theta - config.learning_rate * grad
            k += 1
        record.train_loss.append(float(np.mean(losses)))
        record.val_loss.append(_finite(val_objective(theta), "validation loss", epoch))
        record.params.append(theta.copy())
        record.epoch_seconds.append(time.perf_counter() - start)
        log.debug("epoch %d train %.3e val %.3e", epoch, record.train_loss[-1], record.val_loss[-1])
    return record


def accuracy(experiment: ExperimentSpec, theta, xs) -> float:
    """Fraction of points whose sign of ``h`` matches the ``+-1`` label."""
    pred = np.where(experiment.circuit.estimate_batch(theta, xs) > 0, 1, -1)
    return float(np.mean(pred == experiment.labeler(xs)))
