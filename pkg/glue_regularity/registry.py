"""Scheme lookup by string id and custom linear schemes from mask files"""

from pathlib import Path
from typing import Optional, Tuple, Union

from pydantic import ValidationError

from .exceptions import DomainError
from .models import MaskFile
from .schemes import GlueScheme, LinearScheme, builtin
from .utils import model_validate, read_json


class SchemeName:
    """Supported scheme ids"""
    CHAIKIN = "chaikin"
    FOUR_POINT = "fps"
    CIRCLE = "cps2d"
    BSPLINE_TAU = "bspline_tau"
    SPOILER = "spoiler"
    MASK = "mask"


class SchemeRegistry:
    """Resolve ids like ``chaikin``, ``bspline_tau:0.25`` or ``mask:path.json``"""

    @staticmethod
    def parse(scheme_id: str) -> Tuple[str, Optional[str]]:
        """
        Split a scheme id into name and parameter

        Format: name[:parameter]
        Example: "bspline_tau:0.25" -> ("bspline_tau", "0.25")
        """
        if ":" in scheme_id:
            name, param = scheme_id.split(":", 1)
            return name.strip(), param.strip()
        return scheme_id.strip(), None

    @staticmethod
    def get(scheme_id: str) -> GlueScheme:
        """Build the scheme named by ``scheme_id``"""
        name, param = SchemeRegistry.parse(scheme_id)

        if name == SchemeName.MASK:
            if not param:
                raise DomainError("mask scheme id needs a file: mask:<path>")
            return load_mask(param)

        if name == SchemeName.BSPLINE_TAU:
            try:
                tau = float(param) if param else 0.0
            except ValueError:
                raise DomainError(f"invalid shift {param!r} in {scheme_id!r}")
            return builtin(name, tau=tau)

        if param:
            raise DomainError(f"scheme {name} takes no parameter")
        return builtin(name)


def get_scheme(scheme_id: str) -> GlueScheme:
    return SchemeRegistry.get(scheme_id)


def load_mask(path: Union[str, Path]) -> LinearScheme:
    """
    Read a linear scheme from ``{"m": ..., "tau": ..., "a0": [...], "a1": [...]}``

    Raises:
        DomainError: unreadable file, invalid fields or a scheme that is not
            equilinear with the declared shift
    """
    data = read_json(path)
    try:
        mask = model_validate(MaskFile, data)
    except ValidationError as exc:
        raise DomainError(f"{path}: invalid mask file: {exc.errors()[0].get('msg')}")
    scheme = LinearScheme(
        f"mask:{path}", m=mask.m, tau=mask.tau, a0=mask.a0, a1=mask.a1, nu=mask.nu
    )
    scheme.validate()
    return scheme
