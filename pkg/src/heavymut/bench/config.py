"""Declarative experiment descriptions and their `key = value` file format."""

from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator, model_validator

from heavymut.mutation import DEFAULT_OPERATORS, make_operator

REPEATABLE_KEYS = {"instance": "instances", "operator": "operators"}
SCALAR_KEYS = {
    "repetitions": "repetitions",
    "budget": "budget",
    "master_seed": "master_seed",
    "checkpoints": "checkpoints",
    "output": "output_path",
    "workers": "workers",
    "max_wall_seconds": "max_wall_seconds",
    "undirected": "undirected",
}


class ExperimentConfig(BaseModel):
    """Batch of (instance x operator x run) trials with checkpointed best fitness."""

    model_config = ConfigDict(frozen=True)

    instances: List[str] = Field(..., min_length=1)
    """Fitness specs, see `heavymut.fitness`."""

    operators: List[str] = Field(default_factory=lambda: list(DEFAULT_OPERATORS))
    repetitions: PositiveInt = 100
    budget: PositiveInt
    master_seed: int = Field(0, ge=0, lt=2 ** 64)
    checkpoints: List[int] = []
    """Evaluation counts at which the best fitness is recorded; defaults to the budget."""

    output_path: Optional[Path] = None
    workers: PositiveInt = 1
    max_wall_seconds: Optional[PositiveFloat] = None
    """Wall-clock cap per (instance, operator) pair."""

    undirected: bool = False
    """Read cut instances as undirected graphs."""

    @field_validator("operators")
    @classmethod
    def _parse_operators(cls, operators: List[str]) -> List[str]:
        if not operators:
            raise ValueError("at least one operator is required")
        return [str(make_operator(spec)) for spec in operators]

    @field_validator("checkpoints", mode="before")
    @classmethod
    def _split_checkpoints(cls, value: object) -> object:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @model_validator(mode="before")
    @classmethod
    def _default_checkpoints(cls, data: object) -> object:
        if isinstance(data, dict) and not data.get("checkpoints") and "budget" in data:
            return {**data, "checkpoints": [data["budget"]]}
        return data

    @model_validator(mode="after")
    def _check_checkpoints(self) -> "ExperimentConfig":
        if sorted(set(self.checkpoints)) != self.checkpoints:
            raise ValueError("checkpoints must be strictly increasing")
        if self.checkpoints[0] < 1 or self.checkpoints[-1] > self.budget:
            raise ValueError(f"checkpoints must lie in [1, {self.budget}]")
        return self

    @property
    def trial_count(self) -> int:
        return len(self.instances) * len(self.operators) * self.repetitions


def parse_config(text: str, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Parses the line-oriented experiment format.

    Every non-empty line is `key = value`; `#` starts a comment. `instance` and
    `operator` may repeat, all other keys appear at most once. A relative `output`
    path is resolved against `base_dir`.

    Raises:
        ValueError: For malformed lines, unknown or repeated keys.
        pydantic.ValidationError: If the values do not form a valid experiment.
    """
    values: Dict[str, Union[str, List[str]]] = {field: [] for field in REPEATABLE_KEYS.values()}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not separator or not key or not value:
            raise ValueError(f"line {line_number}: expected 'key = value', got {raw.strip()!r}.")
        if key in REPEATABLE_KEYS:
            values[REPEATABLE_KEYS[key]].append(value)  # type: ignore
        elif key in SCALAR_KEYS:
            field = SCALAR_KEYS[key]
            if field in values:
                raise ValueError(f"line {line_number}: key {key!r} is set twice.")
            values[field] = value
        else:
            raise ValueError(f"line {line_number}: unknown key {key!r}.")

    if not values["operators"]:
        del values["operators"]
    if base_dir is not None and "output_path" in values:
        output = Path(str(values["output_path"]))
        values["output_path"] = str(output if output.is_absolute() else base_dir / output)
    return ExperimentConfig.model_validate(values)


def read_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
