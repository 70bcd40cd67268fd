"""Exception and warning types raised across the package."""

from __future__ import annotations

import math
import os


class AnticoncError(ValueError):
    """Base class for all validation and domain errors."""


class InvalidModel(AnticoncError):
    pass


class DegenerateSymmetrization(AnticoncError):
    """The symmetrized variable never leaves (-2, 2), so q = 0."""


class EmptyDomain(AnticoncError):
    """The eta range [1/(2 |a|_inf), D] is empty."""


class InfeasibleDomain(AnticoncError):
    """No eta with |eta| <= D satisfies max_k |eta . a_k| >= 1/2."""


class BudgetExceeded(AnticoncError):
    """Base for work caps that were hit."""


class BreakpointBudgetExceeded(BudgetExceeded):
    pass


class EnumerationBudgetExceeded(BudgetExceeded):
    pass


class InvalidP(AnticoncError):
    pass


class DegenerateGram(AnticoncError):
    pass


class EmptyCorpus(AnticoncError):
    pass


class ConfigError(AnticoncError):
    pass


class IterationBudgetExceeded(UserWarning):
    """Branch-and-bound stopped early; the certificate is only a heuristic."""


class ToleranceNotReached(UserWarning):
    """Adaptive quadrature hit its depth cap before meeting the tolerance."""


BUDGET_ENV = "ANTICONC_BUDGET_OVERRIDE"


def budget(default: int) -> float:
    """Return the work cap to use, honoring ``ANTICONC_BUDGET_OVERRIDE``.

    The variable may hold a positive number (used as the cap) or one of
    ``inf``/``unlimited``/``off`` to lift caps entirely.
    """
    raw = os.environ.get(BUDGET_ENV, "").strip().lower()
    if not raw:
        return default
    if raw in ("inf", "unlimited", "off", "none"):
        return math.inf
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{BUDGET_ENV}={raw!r} is not a number") from None
    if value <= 0:
        raise ConfigError(f"{BUDGET_ENV} must be positive")
    return value
