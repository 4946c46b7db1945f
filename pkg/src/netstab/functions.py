"""Descriptors for the scalar functions whose matrix versions we evaluate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Exp:
    name = "exp"

    def __call__(self, z):
        return np.exp(z)

    def __str__(self):
        return "exp"


@dataclass(frozen=True)
class Resolvent:
    """``r_alpha(z) = 1 / (1 - alpha z)``."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"resolvent parameter must be positive, got {self.alpha}")

    name = "resolvent"

    @property
    def pole(self) -> float:
        return 1.0 / self.alpha

    def __call__(self, z):
        return 1.0 / (1.0 - self.alpha * np.asarray(z))

    def __str__(self):
        return f"resolvent:{self.alpha:.17g}"


@dataclass(frozen=True)
class Custom:
    """A user function, evaluated pointwise on complex arrays.

    Analyticity on the bound regions is the caller's responsibility.
    """

    evaluator: Callable
    label: str = "custom"

    name = "custom"

    def __call__(self, z):
        return self.evaluator(z)

    def __str__(self):
        return self.label


#: the accepted descriptor types, usable with ``isinstance``
FunctionDescriptor = (Exp, Resolvent, Custom)


def parse_function(spec: str):
    """Parse ``exp`` or ``resolvent:ALPHA``."""
    spec = spec.strip().lower()
    if spec == "exp":
        return Exp()
    if spec.startswith("resolvent:"):
        return Resolvent(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown function {spec!r}; expected 'exp' or 'resolvent:ALPHA'")
