"""Instance files and fingerprint configuration files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Union

from .errors import ValidationError
from .paging import PagingInstance, parse_paging_instances
from .pneh import FingerprintConfig, PnehInstance, parse_pneh_instances
from .pnh import PnhInstance, PnhParams, parse_pnh_instances

PathLike = Union[str, Path]


def _read(path: PathLike) -> str:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return path.read_text()


def _non_empty(instances: list, path: PathLike) -> list:
    if not instances:
        raise ValidationError(f"{path} contains no instances")
    return instances


def load_pnh_instances(path: PathLike, params: PnhParams) -> List[PnhInstance]:
    return _non_empty(parse_pnh_instances(_read(path), params), path)


def load_pneh_instances(path: PathLike) -> List[PnehInstance]:
    return _non_empty(parse_pneh_instances(_read(path)), path)


def load_paging_instances(path: PathLike) -> List[PagingInstance]:
    return _non_empty(parse_paging_instances(_read(path)), path)


def load_fingerprint_config(path: PathLike) -> FingerprintConfig:
    """Read ``{"L": int, "epsilon": float, "t": int, "K": [int, ...], "seed": int | null}``."""

    try:
        payload = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return FingerprintConfig.from_dict(payload)


def save_fingerprint_config(config: FingerprintConfig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


__all__ = [
    "load_fingerprint_config",
    "load_paging_instances",
    "load_pneh_instances",
    "load_pnh_instances",
    "save_fingerprint_config",
]
