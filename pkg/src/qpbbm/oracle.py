"""Classical RK4 on the truncated ODE system, as an independent cross-check.

    dc/dt = lam(n) c(n) + (lam(n)/p) (c^{*p})(n)

The convolution is the same routine the Picard solver uses, so the two
solvers differ only in how they handle time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BlowUpError
from .lattice import Truncation, multipliers
from .picard import TimeGridField
from .spectral import CoeffField, power_values


@dataclass(frozen=True)
class OdeState:
    field: CoeffField
    time: float = 0.0


def _rhs_values(c: np.ndarray, lam: np.ndarray, p: int, trunc: Truncation) -> np.ndarray:
    conv, _ = power_values(c, trunc, p, trunc)
    return lam * c + (lam / p) * conv


def rhs(state: OdeState | CoeffField, omega: Sequence[float], p: int, trunc: Truncation | None = None) -> CoeffField:
    field = state.field if isinstance(state, OdeState) else state
    trunc = trunc or field.trunc
    c = field.restrict(trunc).values
    return CoeffField(trunc, _rhs_values(c, multipliers(trunc.points, omega), p, trunc))


def rk4_integrate(init: CoeffField, T: float, steps: int, omega: Sequence[float], p: int,
                  trunc: Truncation | None = None) -> TimeGridField:
    """Fixed-step RK4 from 0 to T, one frame per step."""
    if steps < 1:
        raise ValueError(f"RK4 needs steps >= 1, got {steps}")
    trunc = trunc or init.trunc
    lam = multipliers(trunc.points, omega)
    h = T / steps
    times = np.linspace(0.0, T, steps + 1)
    out = np.empty((steps + 1, len(trunc)), dtype=complex)
    c = init.restrict(trunc).values.copy()
    out[0] = c
    zero = lam == 0
    for j in range(steps):
        # overflow is reported below as a blow-up, not as a numpy warning
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = _rhs_values(c, lam, p, trunc)
            k2 = _rhs_values(c + 0.5 * h * k1, lam, p, trunc)
            k3 = _rhs_values(c + 0.5 * h * k2, lam, p, trunc)
            k4 = _rhs_values(c + h * k3, lam, p, trunc)
            nxt = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nxt[zero] = c[zero]
        if not np.all(np.isfinite(nxt)):
            raise BlowUpError(j + 1, float(times[j + 1]))
        c = nxt
        out[j + 1] = c
    return TimeGridField(times, trunc, out)
