"""Utility functions for glue_regularity"""

import json
from pathlib import Path
from typing import Any, Type, TypeVar, Union

from .exceptions import DomainError

ModelT = TypeVar("ModelT")


def model_to_dict(obj: Any) -> dict:
    """Convert a pydantic model instance to a dictionary (pydantic v1 and v2)"""
    if hasattr(obj, "model_dump"):
        return obj.model_dump()
    return obj.dict()


def model_validate(model: Type[ModelT], data: Any) -> ModelT:
    """Build a pydantic model from plain data (pydantic v1 and v2)"""
    if hasattr(model, "model_validate"):
        return model.model_validate(data)  # type: ignore[attr-defined]
    return model.parse_obj(data)  # type: ignore[attr-defined]


def dumps(data: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation"""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_model(obj: Any, path: Union[str, Path, None] = None) -> str:
    """Serialize a model to JSON and optionally write it to ``path``"""
    text = dumps(model_to_dict(obj))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_json(path: Union[str, Path]) -> Any:
    """Read a JSON file, turning I/O and parse problems into domain errors"""
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
