"""Run configuration: one ``key = value`` file for data, model, labeler and training."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .data import read_kv_file
from .intention import LabelerConfig
from .model import ModelConfig
from .training import TrainConfig

RUN_KEYS = {"dataset", "train_split", "val_split", "test_split", "checkpoint", "stride"}
LABELER_KEYS = {"d_lat", "d_lon", "delta_t", "v_ref"}


def _coerce(text, default):
    if isinstance(default, bool):
        lowered = str(text).strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return type(default)(text)


def _build(cls, values, **extra):
    kwargs = {}
    for f in fields(cls):
        if f.name in values:
            kwargs[f.name] = _coerce(values[f.name], f.default)
    kwargs.update(extra)
    return cls(**kwargs)


@dataclass
class RunConfig:
    dataset: str = ""
    train_split: str = "train"
    val_split: str = ""
    test_split: str = "test"
    checkpoint: str = "model.ckpt"
    stride: int = 1
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    labeler_overrides: dict = field(default_factory=dict)

    def labeler(self, frame_interval):
        return _build(LabelerConfig, self.labeler_overrides, frame_interval=frame_interval)

    def with_overrides(self, **overrides):
        """Apply CLI overrides (``None`` means not given)."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        train_names = {f.name for f in fields(TrainConfig)}
        model_names = {f.name for f in fields(ModelConfig)}
        run = {k: v for k, v in overrides.items() if k in RUN_KEYS}
        train = {k: v for k, v in overrides.items() if k in train_names}
        model = {k: v for k, v in overrides.items() if k in model_names}
        labeler = {k: v for k, v in overrides.items() if k in LABELER_KEYS}
        return replace(self, **run, train=replace(self.train, **train),
                       model=replace(self.model, **model),
                       labeler_overrides={**self.labeler_overrides, **labeler})


def load_run_config(path):
    """Parse a run config.

    ``dataset`` resolves against the config file's folder; ``checkpoint`` is
    an output path and resolves against ``--out-dir`` instead.
    """
    values = read_kv_file(path)
    known = (RUN_KEYS | LABELER_KEYS | {f.name for f in fields(TrainConfig)}
             | {f.name for f in fields(ModelConfig)})
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    base = Path(path).resolve().parent
    run = RunConfig()
    kwargs = {}
    for key in RUN_KEYS & set(values):
        kwargs[key] = _coerce(values[key], getattr(run, key))
    if "dataset" in kwargs:
        kwargs["dataset"] = str(base / kwargs["dataset"])
    return replace(
        run, **kwargs,
        model=_build(ModelConfig, values),
        train=_build(TrainConfig, values),
        labeler_overrides={k: float(values[k]) for k in LABELER_KEYS & set(values)},
    )
