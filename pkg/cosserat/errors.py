"""Exceptions raised by the constitutive kernel, the finite-element solver and the benchmark harness."""
from typing import Any, Dict, Optional


class CosseratError(Exception):
    """Base class of every error raised by this package."""


class ConfigError(CosseratError):
    """A run configuration failed validation."""


class MaterialError(CosseratError):
    """Invalid material parameters or an operation undefined for the given material."""


class DegenerateSpectrumError(CosseratError):
    """Eigenvalues too close for the spectral derivatives to exist."""


class StationaryLodeAngleError(CosseratError):
    """The Lode-angle gradient was requested at a triaxial state where it is unbounded."""


class ReturnMapDivergence(CosseratError):
    """A scalar return-mapping solve hit its iteration cap."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class RegimeBoundaryError(CosseratError):
    """Finite-difference perturbations kept flipping the return regime."""


class MeshError(CosseratError):
    """Malformed mesh data or a degenerate element."""

    def __init__(self, message: str, element: Optional[int] = None):
        super().__init__(message if element is None else f"{message} (element {element})")
        self.element = element


class SolverDivergence(CosseratError):
    """The global Newton loop failed after all step bisections."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OutputError(CosseratError):
    """Writing a result file failed."""

    def __init__(self, message: str, path: Any = None):
        super().__init__(message if path is None else f"{message}: {path}")
        self.path = path
