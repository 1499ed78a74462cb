"""Grim reapers (translation-invariant translators of mean curvature flow) in H^2 x R."""

from .errors import (
    AmbiguousDichotomyError,
    DegenerateSurfaceError,
    DomainError,
    GrimReaperError,
    IntegrationError,
    NoClosedFormError,
    RigidFamilyError,
    UnsupportedFamilyError,
    UnsupportedKindError,
)
from .geometry import FieldKind, FrameVector, PointHxR, TranslationKind
from .integrator import Trajectory, integrate
from .odes import ALL_FAMILIES, FamilyClass, FamilySpec, family
from .surfaces import SurfaceKind

__all__ = [
    "ALL_FAMILIES",
    "AmbiguousDichotomyError",
    "DegenerateSurfaceError",
    "DomainError",
    "FamilyClass",
    "FamilySpec",
    "FieldKind",
    "FrameVector",
    "GrimReaperError",
    "IntegrationError",
    "NoClosedFormError",
    "PointHxR",
    "RigidFamilyError",
    "SurfaceKind",
    "Trajectory",
    "TranslationKind",
    "UnsupportedFamilyError",
    "UnsupportedKindError",
    "family",
    "integrate",
]
