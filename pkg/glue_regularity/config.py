"""
Run configuration for certificate searches and chain checks.

Values are resolved from, lowest precedence first: the defaults below, a TOML
file, the ``GLUE_CERT_THREADS`` environment variable and explicit overrides
(command-line flags).
"""

import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from .exceptions import DomainError
from .utils import model_to_dict, model_validate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

THREADS_ENV = "GLUE_CERT_THREADS"

# Recursion guard for exhaustive products over index vectors
MAX_CERT_DEPTH = 12


class Tolerances(BaseModel):
    """Numerical tolerances recorded with every result"""

    degeneracy: float = Field(1e-14, gt=0.0)
    structure: float = Field(1e-8, gt=0.0)
    difference: float = Field(1e-10, gt=0.0)


class RunConfig(BaseModel):
    """
    Search and check parameters.

    Attributes:
        scheme: Scheme id the run is about (recorded in outputs)
        dim: Point dimension; None uses the scheme's own (or 2)
        ell_max: Largest inner depth tried for the bound on Gamma_l[delta]
        k_max: Largest annulus depth tried while growing gamma
        delta_grid: Inner radii tried, any order
        gamma_max: Upper end of the gamma bisection
        gamma_steps: Bisection steps for gamma
        budget: Boxes evaluated per bound computation
        rel_gap: Stop refining once bound and estimate agree this closely
        threads: Worker threads for box evaluation
        max_rounds: Subdivision rounds tried by chain checks
    """

    scheme: Optional[str] = None
    dim: Optional[int] = Field(None, ge=1)
    ell_max: int = Field(4, ge=1, le=MAX_CERT_DEPTH)
    k_max: int = Field(2, ge=1, le=MAX_CERT_DEPTH)
    delta_grid: List[float] = [1e-1, 1e-2, 1e-3]
    gamma_max: float = Field(0.5, gt=0.0)
    gamma_steps: int = Field(12, ge=0)
    budget: int = Field(2000, ge=0)
    rel_gap: float = Field(0.01, ge=0.0)
    threads: int = Field(1, ge=1)
    max_rounds: int = Field(10, ge=0)
    tolerances: Tolerances = Tolerances()

    def checked(self) -> "RunConfig":
        """Validate constraints across fields"""
        if not self.delta_grid:
            raise DomainError("delta grid must not be empty")
        if any(delta <= 0 for delta in self.delta_grid):
            raise DomainError("delta grid entries must be positive")
        return self

    def recorded(self) -> Dict[str, Any]:
        """Plain dict stored in certificates and verdicts"""
        return model_to_dict(self)


def read_toml(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}")
    except tomllib.TOMLDecodeError as exc:
        raise DomainError(f"{path}: invalid TOML: {exc}")


def threads_from_env(environ: Optional[Mapping[str, str]] = None) -> Optional[int]:
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}")


def load_config(
    path: Union[str, Path, None] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """
    Resolve a ``RunConfig``.

    Args:
        path: Optional TOML file; keys are the field names, tolerances in a
            ``[tolerances]`` table
        overrides: Field values from flags; None entries are ignored
        environ: Environment to read (defaults to ``os.environ``)

    Raises:
        DomainError: unreadable file, unknown key or invalid value
    """
    data: Dict[str, Any] = {}
    if path is not None:
        data.update(read_toml(path))
    known = set(getattr(RunConfig, "model_fields", None) or RunConfig.__fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise DomainError(f"unknown configuration keys: {', '.join(unknown)}")

    threads = threads_from_env(environ)
    if threads is not None:
        data["threads"] = threads

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "tolerances":
            merged = dict(data.get("tolerances", {}))
            merged.update(value)
            data["tolerances"] = merged
        else:
            data[key] = value

    try:
        config = model_validate(RunConfig, data)
    except ValidationError as exc:
        error = exc.errors()[0]
        where = ".".join(str(part) for part in error.get("loc", ()))
        raise DomainError(f"invalid configuration value for {where}: {error.get('msg')}")
    return config.checked()
