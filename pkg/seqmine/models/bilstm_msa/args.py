import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from seqmine.errors import ConfigValidationError, DomainError

from .attention import half_width_of


@dataclass
class ModelArgs:
    model_type: str = "bilstm_msa"

    input_dim: int = 1
    num_classes: int = 2
    hidden_size: int = 64

    # Full window lengths W = 2*w + 1, one attention scale each
    window_lengths: list[int] = field(default_factory=lambda: [3, 7, 11])

    # Initialization
    seed: int = 0

    def __post_init__(self):
        self.window_lengths = [int(w) for w in self.window_lengths]

        if self.input_dim < 1 or self.hidden_size < 1:
            raise ConfigValidationError(
                f"input_dim and hidden_size must be positive, got {self.input_dim}, {self.hidden_size}"
            )
        if self.num_classes < 2:
            raise ConfigValidationError(f"num_classes must be >= 2, got {self.num_classes}")
        if not self.window_lengths:
            raise ConfigValidationError("at least one attention window is required")

        try:
            for w in self.window_lengths:
                half_width_of(w)
        except DomainError as e:
            raise ConfigValidationError(str(e)) from e

    @property
    def half_widths(self) -> list[int]:
        return [half_width_of(w) for w in self.window_lengths]

    @property
    def num_scales(self) -> int:
        return len(self.window_lengths)

    @property
    def context_size(self) -> int:
        return self.num_scales * 2 * self.hidden_size

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "ModelArgs":
        match data.get("model_type", "bilstm_msa"):
            case "bilstm_msa":
                return ModelArgs(**data)
            case other:
                raise ConfigValidationError(f"Unknown model type: {other}")

    @staticmethod
    def from_pretrained(path: str | Path) -> "ModelArgs":
        with open(path, "r", encoding="utf-8") as f:
            return ModelArgs.from_dict(json.load(f))

    def save(self, path: str | Path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=4, sort_keys=True, ensure_ascii=False)
