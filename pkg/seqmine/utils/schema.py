from pathlib import Path
from typing import Literal, Optional

from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from typing_extensions import Annotated

from seqmine.datasets.synthetic import SynthSpec
from seqmine.errors import ConfigValidationError
from seqmine.models.bilstm_msa import ModelArgs

BASE_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "base.yaml"

PositiveInt = Annotated[int, Field(ge=1)]


def _check_windows(values: list[int]) -> list[int]:
    if not values:
        raise ValueError("at least one window length is required")
    for w in values:
        if w < 1 or w % 2 == 0:
            raise ValueError(f"window lengths must be odd and >= 1, got {w}")
    return values


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataSection(Section):
    train: Optional[Path] = None
    test: Optional[Path] = None
    # pad or trim every sample to this many steps
    length: Optional[PositiveInt] = None
    normalize: bool = True


class SynthSection(Section):
    num_classes: Annotated[int, Field(ge=2)] = 4
    samples_per_class: Annotated[int, Field(ge=2)] = 75
    length: PositiveInt = 50
    channels: PositiveInt = 3
    motif_length: PositiveInt = 10
    noise: Annotated[float, Field(ge=0.0)] = 0.3
    amplitude: Annotated[float, Field(gt=0.0)] = 2.0

    def to_spec(self, seed: int) -> SynthSpec:
        return SynthSpec(seed=seed, **self.model_dump())


class ModelSection(Section):
    hidden_size: PositiveInt = 64
    window_lengths: list[int] = [3, 7, 11]

    @field_validator("window_lengths")
    @classmethod
    def odd_windows(cls, v: list[int]) -> list[int]:
        return _check_windows(v)

    def to_args(self, input_dim: int, num_classes: int, seed: int) -> ModelArgs:
        return ModelArgs(
            input_dim=input_dim,
            num_classes=num_classes,
            hidden_size=self.hidden_size,
            window_lengths=list(self.window_lengths),
            seed=seed,
        )


class TrainConfig(Section):
    # 0 is accepted and freezes the parameters
    lr: Annotated[float, Field(ge=0.0)] = 1e-3
    beta1: Annotated[float, Field(ge=0.0, lt=1.0)] = 0.9
    beta2: Annotated[float, Field(ge=0.0, lt=1.0)] = 0.999
    eps: Annotated[float, Field(gt=0.0)] = 1e-8
    batch_size: PositiveInt = 16
    max_epochs: PositiveInt = 200
    patience: PositiveInt = 10
    min_delta: Annotated[float, Field(ge=0.0)] = 1e-4
    early_stop_on: Literal["train_loss", "eval_loss"] = "train_loss"
    grad_clip: Optional[Annotated[float, Field(gt=0.0)]] = None
    checkpoint_every: Optional[PositiveInt] = None
    progress: bool = True


class SweepSection(Section):
    lengths: list[PositiveInt] = [20, 60, 100, 140, 180, 200]
    windows: list[int] = [3, 7, 11]
    workers: PositiveInt = 1

    @field_validator("lengths")
    @classmethod
    def nonempty(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one sequence length is required")
        return v

    @field_validator("windows")
    @classmethod
    def odd_windows(cls, v: list[int]) -> list[int]:
        return _check_windows(v)


class RunSpec(Section):
    seed: int = 7
    out: Path = Path("results/seqmine")
    label: str = "BiLSTM + Multi-Scale Attention"
    data: DataSection = DataSection()
    synth: SynthSection = SynthSection()
    model: ModelSection = ModelSection()
    train: TrainConfig = TrainConfig()
    sweep: SweepSection = SweepSection()

    @property
    def uses_synthetic(self) -> bool:
        return self.data.train is None


class ScaleTrace(BaseModel):
    window_length: int
    half_width: int
    energies: list[float]
    weights: list[float]


class AttentionTraceDocument(BaseModel):
    """JSON written by `inspect-attention`."""

    sample_index: int
    split: str
    label: int
    predicted_class: int
    probs: list[float]
    scales: list[ScaleTrace]


def validate_run_spec(data: dict) -> RunSpec:
    try:
        return RunSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigValidationError(f"Invalid run spec:\n{e}") from e


def compose_run_spec(config_file: Path | str | None = None, overrides: list[str] = ()) -> RunSpec:
    """base.yaml, then the run-spec file (JSON or YAML), then dotlist overrides."""

    try:
        cfg = OmegaConf.load(BASE_CONFIG)
        if config_file is not None:
            cfg = OmegaConf.merge(cfg, OmegaConf.load(config_file))
        if overrides:
            cfg = OmegaConf.merge(cfg, OmegaConf.from_dotlist(list(overrides)))
        data = OmegaConf.to_container(cfg, resolve=True)
    except OmegaConfBaseException as e:
        raise ConfigValidationError(f"Invalid configuration: {e}") from e

    return validate_run_spec(data)
