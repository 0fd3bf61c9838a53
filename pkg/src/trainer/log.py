"""Per-step training records, written as CSV and mirrored as JSON lines."""

import json
from pathlib import Path
from typing import Iterator, List, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict

from src.errors import FormatError

CSV_COLUMNS = ("step", "lr", "l_g1", "l_g2_s", "l_g2_t", "l_g3", "l_d", "mask_fraction", "ms")
CSV_FILE = "train_log.csv"
JSONL_FILE = "train_log.jsonl"

PathLike = Union[str, Path]


class StepRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    step: int
    lr: float
    l_g1: float
    l_g2_s: float = 0.0
    l_g2_t: float = 0.0
    l_g3: float = 0.0
    l_d: float = 0.0
    mask_fraction: float = 0.0
    seed_fraction: float = 0.0
    ms: float = 0.0


class TrainLog:
    """Append-only list of StepRecords with strictly increasing steps."""

    def __init__(self, records: List[StepRecord] = None):
        self.records: List[StepRecord] = []
        for record in records or []:
            self.append(record)

    def append(self, record: StepRecord) -> None:
        if self.records and record.step <= self.records[-1].step:
            raise ValueError(f"step {record.step} does not follow step {self.records[-1].step}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[StepRecord]:
        return iter(self.records)

    def to_frame(self) -> pd.DataFrame:
        rows = [r.model_dump() for r in self.records]
        return pd.DataFrame(rows, columns=list(StepRecord.model_fields))

    def write_csv(self, path: PathLike) -> None:
        frame = self.to_frame()[list(CSV_COLUMNS)]
        frame.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")

    def write_jsonl(self, path: PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for record in self.records:
                f.write(json.dumps(record.model_dump(), sort_keys=True) + "\n")

    def write(self, out_dir: PathLike) -> None:
        out_dir = Path(out_dir)
        self.write_csv(out_dir / CSV_FILE)
        self.write_jsonl(out_dir / JSONL_FILE)

    @classmethod
    def read_jsonl(cls, path: PathLike) -> "TrainLog":
        path = Path(path)
        records = []
        for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(StepRecord.model_validate_json(line))
            except ValueError as e:
                raise FormatError(f"{path}:{number}: invalid training record ({e})") from e
        try:
            return cls(records)
        except ValueError as e:
            raise FormatError(f"{path}: {e}") from e
