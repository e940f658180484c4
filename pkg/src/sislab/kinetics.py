"""
Reaction terms of the four SIS models.

========  =====================  ===========================
model     incidence              recruitment / death
========  =====================  ===========================
``MO``    beta S I               none (mass conserved)
``MW``    beta S I               Lambda - S, death mu I
``SO``    beta S I / (S + I)     none (mass conserved)
``SW``    beta S I / (S + I)     Lambda - S
========  =====================  ===========================

All functions broadcast: pass scalars with a :class:`NodeCoefficients` or whole
fields with a :class:`CoefficientSet`.
"""

import enum
from collections import namedtuple

import numpy as np

from .errors import ValidationError

__all__ = ["ModelKind", "ReactionValue", "incidence", "reaction", "reaction_jacobian"]


class ModelKind(str, enum.Enum):
    MO = "MO"
    MW = "MW"
    SO = "SO"
    SW = "SW"

    @property
    def mass_action(self):
        return self in (ModelKind.MO, ModelKind.MW)

    @property
    def conserves_mass(self):
        return self in (ModelKind.MO, ModelKind.SO)

    @property
    def has_recruitment(self):
        return not self.conserves_mass

    @property
    def description(self):
        return {
            "MO": "Mass-action incidence without birth-death",
            "MW": "Mass-action incidence with birth-death",
            "SO": "Standard incidence without birth-death",
            "SW": "Standard incidence with birth-death",
        }[self.value]

    @classmethod
    def parse(cls, value):
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValidationError(f"unknown model {value!r}; expected one of MO, MW, SO, SW") from None

    def __str__(self):
        return self.value


ReactionValue = namedtuple("ReactionValue", "f_S f_I")


def _check_nonneg(S, I):
    S = np.asarray(S, dtype=float)
    I = np.asarray(I, dtype=float)
    if np.any(S < 0) or np.any(I < 0):
        raise ValidationError("reaction terms need S >= 0 and I >= 0")
    return S, I


def _std_fraction(S, I):
    """S I / (S + I) with the value 0 where S + I = 0."""
    tot = S + I
    safe = np.where(tot > 0, tot, 1.0)
    return np.where(tot > 0, S * I / safe, 0.0)


def incidence(kind, beta, S, I):
    """New infections per unit time: ``beta S I`` or ``beta S I / (S + I)``."""
    kind = ModelKind(kind)
    S, I = _check_nonneg(S, I)
    if kind.mass_action:
        out = beta * S * I
    else:
        out = beta * _std_fraction(S, I)
    return out[()] if np.ndim(out) == 0 else out


def reaction(kind, coeffs, S, I):
    """Right-hand sides without diffusion, as a :class:`ReactionValue`.

    The conserved models are written so ``f_S + f_I`` cancels exactly: both
    components are built from the same two floating-point terms.
    """
    kind = ModelKind(kind)
    inc = incidence(kind, coeffs.beta, S, I)
    S = np.asarray(S, dtype=float)
    I = np.asarray(I, dtype=float)
    recov = coeffs.gamma * I
    if kind.conserves_mass:
        f_S = recov - inc
        f_I = inc - recov
    else:
        f_S = (coeffs.lam - S) + (recov - inc)
        f_I = inc - recov
        if kind is ModelKind.MW:
            f_I = f_I - coeffs.mu * I
    return ReactionValue(f_S, f_I)


def reaction_jacobian(kind, coeffs, S, I):
    """Analytic ``d(f_S, f_I)/d(S, I)``.

    Returns an array of shape ``(2, 2) + broadcast_shape`` ordered
    ``[[dfS/dS, dfS/dI], [dfI/dS, dfI/dI]]``. For standard incidence at
    ``S + I = 0`` the incidence contribution is taken as zero.
    """
    kind = ModelKind(kind)
    S, I = _check_nonneg(S, I)
    beta, gamma = coeffs.beta, coeffs.gamma
    if kind.mass_action:
        dinc_dS = beta * I
        dinc_dI = beta * S
    else:
        tot = S + I
        pos = tot > 0
        tot2 = np.where(pos, tot, 1.0) ** 2
        dinc_dS = np.where(pos, beta * I * I / tot2, 0.0)
        dinc_dI = np.where(pos, beta * S * S / tot2, 0.0)
    shape = np.broadcast(S, I, beta, gamma, coeffs.lam, coeffs.mu).shape
    jac = np.empty((2, 2) + shape)
    jac[0, 0] = -dinc_dS
    jac[0, 1] = gamma - dinc_dI
    jac[1, 0] = dinc_dS
    jac[1, 1] = dinc_dI - gamma
    if kind.has_recruitment:
        jac[0, 0] -= 1.0
    if kind is ModelKind.MW:
        jac[1, 1] -= coeffs.mu
    return jac
