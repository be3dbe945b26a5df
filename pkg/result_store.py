import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from evolution_core import ArchiveEntry, ParetoArchive
from exceptions import ArgumentError
from narx_model import EstimatedModel, ModelSet, model_to_dict

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def model_set_dict(model_set: ModelSet) -> Dict[str, int]:
    return {"n_u": model_set.n_u, "n_y": model_set.n_y, "n_l": model_set.n_l}


def archive_payload(archive: ParetoArchive, meta: Optional[Dict] = None) -> Dict:
    return {
        **(meta or {}),
        "entries": [e.to_dict() for e in archive.sorted_entries()],
        "evaluations": archive.evaluations,
        "generations": archive.generations,
    }


def load_archive(path: Union[str, Path]) -> Tuple[ParetoArchive, Dict]:
    """Archive JSON back into a ParetoArchive plus the metadata stored next to it"""
    data = read_json(path)
    archive = ParetoArchive.from_entries(ArchiveEntry.from_dict(e) for e in data.pop("entries", []))
    archive.evaluations = int(data.pop("evaluations", 0))
    archive.generations = int(data.pop("generations", 0))
    if len(archive) == 0:
        logger.warning(f"archive {path} has no entries")
    return archive, data


def read_json(path: Union[str, Path]) -> Dict:
    path = Path(path)
    if not path.exists():
        raise ArgumentError(f"{path} not found")
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    version = data.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ArgumentError(f"{path}: unsupported schema_version {version!r}")
    return data


class ResultStore:
    """Owns one output directory; every file it writes is deterministic for fixed inputs"""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    def path(self, name: str) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_json(self, name: str, payload: Dict) -> Path:
        path = self.path(name)
        text = json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True, default=_json_default)
        path.write_text(text + "\n", encoding="utf-8")
        return self._record(path)

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.path(name)
        frame.to_csv(path, index=False)
        return self._record(path)

    def write_text(self, name: str, text: str) -> Path:
        path = self.path(name)
        path.write_text(text, encoding="utf-8")
        return self._record(path)

    def save_archive(self, name: str, archive: ParetoArchive, meta: Optional[Dict] = None) -> Path:
        return self.write_json(name, archive_payload(archive, meta))

    def save_models(self, name: str, models: List[EstimatedModel], meta: Optional[Dict] = None) -> Path:
        return self.write_json(name, {**(meta or {}), "models": [model_to_dict(m) for m in models]})

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        logger.debug(f"wrote {path}")
        return path
