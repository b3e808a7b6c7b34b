# refdense/infra/step_log.py
"""step_log.py
NDJSON 기록기. pydantic 레코드를 한 줄에 하나씩 쓴다(None 필드 생략).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, List, Optional, Type, TypeVar

from pydantic import BaseModel

R = TypeVar("R", bound=BaseModel)


class NdjsonWriter:
    """``with NdjsonWriter(path) as log: log.write(record)``. path 가 None 이면 기록하지 않는다."""

    def __init__(self, path: Optional[str | Path]):
        self.path = Path(path) if path is not None else None
        self._fh: Optional[IO[str]] = None
        self.count = 0

    def __enter__(self) -> "NdjsonWriter":
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", encoding="utf-8")
        return self

    def __exit__(self, *exc) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def write(self, record: BaseModel) -> None:
        self.count += 1
        if self._fh is None:
            return
        self._fh.write(json.dumps(record.model_dump(mode="json", exclude_none=True), separators=(",", ":")) + "\n")
        self._fh.flush()


def read_ndjson(path: str | Path, model: Type[R]) -> List[R]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [model.model_validate_json(line) for line in lines if line.strip()]
