"""Total loss, the optimisation loop and checkpoint files.

Checkpoint layout (``torch.save`` of a plain dict)::

    format          "stcrf-checkpoint"
    version         1
    model_config    ModelConfig fields, incl. the relative-input mode
    train_config    TrainConfig fields
    labeler_config  LabelerConfig fields
    epoch           epoch the parameters were taken from (1-based)
    history         per-epoch dicts of loss components and val ADE/FDE
    state_dict      named parameter blocks, e.g. "encoder.blocks.0.gcn.weight",
                    "time_crf_lat.transitions", "decoder.gate"
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import NamedTuple

import numpy as np
import torch

from .evaluation import ade, fde
from .intention import LabelerConfig
from .model import STCRF, ModelConfig, prepare_window

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "stcrf-checkpoint"
CHECKPOINT_VERSION = 1


class NonFiniteLoss(FloatingPointError):
    def __init__(self, component, value):
        super().__init__(f"non-finite {component} loss: {value}")
        self.component = component


@dataclass
class TrainConfig:
    epochs: int = 250
    batch_size: int = 1
    learning_rate: float = 0.01
    momentum: float = 0.9
    optimizer: str = "sgd"
    lr_step: int = 150
    lr_gamma: float = 0.2
    grad_clip: float = 0.0
    w_s: float = 1.0
    w_t: float = 1.0
    w_traj: float = 1.0
    use_l_s: bool = True
    use_l_t: bool = True
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")
        if min(self.w_s, self.w_t, self.w_traj) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @classmethod
    def from_dict(cls, values):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in names})


ABLATIONS = {
    "none": {},
    "no-space-crf": {"use_l_s": False},
    "no-time-crf": {"use_l_t": False},
}


class LossBreakdown(NamedTuple):
    total: torch.Tensor
    space: torch.Tensor
    time: torch.Tensor
    trajectory: torch.Tensor

    def as_floats(self):
        return {k: float(v.detach()) for k, v in self._asdict().items()}


def total_loss(model, prepared, config, output=None):
    """``w_S * L_S + w_T * L_T + w_traj * L1`` and its components.

    L_S and L_T each sum the lateral and longitudinal chain NLLs (batch
    means); L1 is the mean absolute coordinate error.  A disabled CRF term
    is a constant zero and contributes no gradient.
    """
    out = output if output is not None else model.run(prepared)
    zero = out.prediction.new_zeros(())
    space = time = zero
    if config.use_l_s:
        space = (model.space_crf_lat(out.space_lat, prepared.obs_alpha)
                 + model.space_crf_lon(out.space_lon, prepared.obs_beta))
    if config.use_l_t:
        time = (model.time_crf_lat(out.time_lat, prepared.fut_alpha.T)
                + model.time_crf_lon(out.time_lon, prepared.fut_beta.T))
    traj = (out.prediction - prepared.future).abs().mean()
    for name, value in (("space", space), ("time", time), ("trajectory", traj)):
        if not torch.isfinite(value):
            raise NonFiniteLoss(name, float(value.detach()))
    total = config.w_s * space + config.w_t * time + config.w_traj * traj
    return LossBreakdown(total, space, time, traj)


@dataclass
class Checkpoint:
    state_dict: dict
    model_config: dict
    train_config: dict = field(default_factory=dict)
    labeler_config: dict = field(default_factory=dict)
    epoch: int = 0
    history: list = field(default_factory=list)

    def build_model(self):
        model = STCRF(ModelConfig(**self.model_config))
        dtype = next(iter(self.state_dict.values())).dtype
        model.to(dtype)
        model.load_state_dict(self.state_dict)
        model.eval()
        return model

    def save(self, path):
        torch.save({
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "model_config": self.model_config,
            "train_config": self.train_config,
            "labeler_config": self.labeler_config,
            "epoch": self.epoch,
            "history": self.history,
            "state_dict": self.state_dict,
        }, path)

    @classmethod
    def load(cls, path):
        blob = torch.load(path, map_location="cpu", weights_only=True)
        if not isinstance(blob, dict) or blob.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not an stcrf checkpoint")
        if blob.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {blob.get('version')}")
        return cls(blob["state_dict"], blob["model_config"], blob["train_config"],
                   blob["labeler_config"], blob["epoch"], blob["history"])


def _metrics(model, prepared):
    errs_ade, errs_fde, counts = 0.0, 0.0, 0
    with torch.no_grad():
        for p in prepared:
            pred = model.run(p).prediction.double().numpy()
            truth = p.future.double().numpy()
            n = truth.shape[2]
            errs_ade += ade(pred, truth) * n
            errs_fde += fde(pred, truth) * n
            counts += n
    return errs_ade / counts, errs_fde / counts


def train(windows, config=None, model_config=None, labeler_config=None, val_windows=None,
          checkpoint_path=None, dtype=torch.float32, callback=None):
    """Fit a fresh model and return the best-by-validation checkpoint.

    One window is one forward pass; ``batch_size`` windows are accumulated
    per optimiser step.  Validation falls back to the training windows.
    """
    config = config or TrainConfig()
    model_config = model_config or ModelConfig()
    labeler_config = labeler_config or LabelerConfig()
    if not windows:
        raise ValueError("training set is empty")

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    model = STCRF(model_config).to(dtype)
    train_set = [prepare_window(w, model_config, labeler_config, dtype) for w in windows]
    val_set = (train_set if val_windows is None else
               [prepare_window(w, model_config, None, dtype) for w in val_windows])

    if config.optimizer == "sgd":
        opt = torch.optim.SGD(model.parameters(), lr=config.learning_rate,
                              momentum=config.momentum)
    else:
        opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=max(config.lr_step, 1),
                                            gamma=config.lr_gamma)

    history = []
    best = (math.inf, None, 0)
    for epoch in range(1, config.epochs + 1):
        model.train()
        sums = np.zeros(4)
        order = rng.permutation(len(train_set))
        for start in range(0, len(order), config.batch_size):
            chunk = order[start:start + config.batch_size]
            opt.zero_grad(set_to_none=True)
            for idx in chunk:
                losses = total_loss(model, train_set[idx], config)
                (losses.total / len(chunk)).backward()
                sums += [float(v.detach()) for v in losses]
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            opt.step()
        sched.step()

        record = dict(zip(("loss", "space", "time", "trajectory"),
                          (float(v) for v in sums / len(train_set))))
        record["epoch"] = epoch
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            model.eval()
            record["val_ade"], record["val_fde"] = map(float, _metrics(model, val_set))
            if record["val_ade"] < best[0]:
                best = (record["val_ade"], copy.deepcopy(model.state_dict()), epoch)
        history.append(record)
        log.info("epoch %d loss %.4f (S %.4f T %.4f L1 %.4f) val ADE %s", epoch,
                 record["loss"], record["space"], record["time"], record["trajectory"],
                 f"{record['val_ade']:.4f}" if "val_ade" in record else "-")
        if callback is not None:
            callback(record, model)

    ckpt = Checkpoint(best[1], model_config.to_dict(), asdict(config),
                      asdict(labeler_config), best[2], history)
    if checkpoint_path is not None:
        ckpt.save(checkpoint_path)
    return ckpt
