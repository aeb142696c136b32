"""
Device - Microring resonator transfer functions and their inversions.

Pure models of the all-pass ring used by the modulator array and the add-drop
ring used by the photonic weight bank. Every function accepts a scalar or a
numpy array of phases/targets and returns a float for scalar input.

Two equation modes are supported (see ``EquationMode``). In ``consistent``
mode the all-pass inversion uses the sign that makes it invert the forward
transfer, the drop-port numerator is (1 - r^2)^2 a so that T_p + T_d = 1 for a
lossless ring, and the weight inversion divides by 2 r^2. ``verbatim`` mode
keeps the printed formulas for comparison.

Example:
    >>> p = MrrParams()
    >>> phi = drop_phase_for_weight(0.25, p)
    >>> round(2 * adddrop_drop(phi, p) - 1, 9)
    0.25
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .config import EquationMode, MrrParams
from .errors import ContractError, DeviceRangeError


logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DENOMINATOR_FLOOR = 1e-15
ARCCOS_SLACK = 1e-12


def _out(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def _guard(den: np.ndarray, phi: np.ndarray, what: str) -> None:
    bad = np.broadcast_to(den <= DENOMINATOR_FLOOR, np.shape(den))
    if np.any(bad):
        first = float(np.broadcast_to(phi, np.shape(den))[bad].flat[0])
        raise DeviceRangeError(f"{what} denominator vanishes or is negative at phi={first:.6g}", first)


def _checked_arccos(arg: np.ndarray, target: np.ndarray, interval: Tuple[float, float], what: str) -> np.ndarray:
    outside = (arg < -1.0 - ARCCOS_SLACK) | (arg > 1.0 + ARCCOS_SLACK) | ~np.isfinite(arg)
    if np.any(outside):
        first = float(np.broadcast_to(target, np.shape(arg))[outside].flat[0])
        raise DeviceRangeError(f"{what} {first:.6g} is not achievable", first, interval)
    return np.arccos(np.clip(arg, -1.0, 1.0))


# ---------------------------------------------------------------------------
# All-pass ring
# ---------------------------------------------------------------------------

def allpass_transmission(phi: ArrayLike, p: MrrParams) -> ArrayLike:
    """Intensity transmission T_n(phi) of an all-pass ring."""
    phi = np.asarray(phi, dtype=float)
    r, a = p.r, p.a
    c = np.cos(phi)
    num = a * a - 2.0 * r * a * c + r * r
    den = 1.0 - 2.0 * r * a * c + (a * r) ** 2
    _guard(den, phi, "all-pass")
    return _out(num / den)


def phase_from_wavelength(lambda_m: ArrayLike, p: MrrParams) -> ArrayLike:
    """Round-trip phase 4 pi^2 d n_eff / lambda, reduced modulo 2 pi.

    Raises:
        ContractError: If any wavelength is not positive
    """
    lam = np.asarray(lambda_m, dtype=float)
    if np.any(~(lam > 0)):
        raise ContractError(f"wavelength must be positive, got {lambda_m}")
    phi = 4.0 * math.pi**2 * p.radius_m * p.n_eff / lam
    return _out(np.mod(phi, 2.0 * math.pi))


def intensity_interval(p: MrrParams) -> Tuple[float, float]:
    """Achievable all-pass intensities [T_n(0), T_n(pi)]."""
    return float(allpass_transmission(0.0, p)), float(allpass_transmission(math.pi, p))


def allpass_phase_for_intensity(target: ArrayLike, p: MrrParams) -> ArrayLike:
    """Phase that programs an all-pass ring to intensity ``target``.

    Returns the principal arccos branch in [0, pi].

    Raises:
        DeviceRangeError: For A = 1 (pole) or A outside the achievable interval
    """
    A = np.asarray(target, dtype=float)
    interval = intensity_interval(p)
    if np.any(A == 1.0):
        raise DeviceRangeError("intensity 1 is a pole of the all-pass inversion", 1.0, interval)

    r, a = p.r, p.a
    if p.mode is EquationMode.CONSISTENT:
        num = a * a + r * r - A * (1.0 + (a * r) ** 2)
    else:
        num = A * (1.0 + (a * r) ** 2) - a * a - r * r
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = num / (2.0 * r * a * (1.0 - A))
    return _out(_checked_arccos(arg, A, interval, "intensity"))


# ---------------------------------------------------------------------------
# Add-drop ring
# ---------------------------------------------------------------------------

def _adddrop_denominator(c: np.ndarray, p: MrrParams) -> np.ndarray:
    r2 = p.r * p.r
    return 1.0 - 2.0 * r2 * c + (r2 * p.a) ** 2


def _drop_numerator(p: MrrParams) -> float:
    if p.mode is EquationMode.CONSISTENT:
        return (1.0 - p.r * p.r) ** 2 * p.a
    return (1.0 - p.r) ** 2 * p.a


def adddrop_through(phi: ArrayLike, p: MrrParams) -> ArrayLike:
    """Through-port intensity transmission T_p(phi); identical in both modes."""
    phi = np.asarray(phi, dtype=float)
    c = np.cos(phi)
    r2 = p.r * p.r
    num = (p.a * p.r) ** 2 - 2.0 * r2 * c + r2
    den = _adddrop_denominator(c, p)
    _guard(den, phi, "through-port")
    return _out(num / den)


def adddrop_drop(phi: ArrayLike, p: MrrParams) -> ArrayLike:
    """Drop-port intensity transmission T_d(phi)."""
    phi = np.asarray(phi, dtype=float)
    den = _adddrop_denominator(np.cos(phi), p)
    _guard(den, phi, "drop-port")
    return _out(_drop_numerator(p) / den)


def adddrop_balanced(phi: ArrayLike, p: MrrParams, gain: float = 1.0) -> ArrayLike:
    """Balanced photodiode output g (T_d - T_p) of one add-drop ring."""
    t_d = np.asarray(adddrop_drop(phi, p))
    t_p = np.asarray(adddrop_through(phi, p))
    return _out(gain * (t_d - t_p))


def _weight_coefficients(p: MrrParams) -> Tuple[float, float, float]:
    # arccos argument is (c0 - c1 / (f + 1)) / div in both modes
    r2a = p.r * p.r * p.a
    c0 = 1.0 + r2a**2
    c1 = 2.0 * _drop_numerator(p)
    div = 2.0 * p.r * p.r if p.mode is EquationMode.CONSISTENT else 2.0 * r2a
    return c0, c1, div


def weight_interval(p: MrrParams) -> Tuple[float, float]:
    """Achievable normalized weights 2 T_d - 1 for the drop inversion."""
    c0, c1, div = _weight_coefficients(p)
    lo = c1 / (c0 + div) - 1.0
    hi = c1 / (c0 - div) - 1.0 if c0 - div > 0 else math.inf
    return max(lo, -1.0), min(hi, 1.0)


def drop_phase_for_weight(f_star: ArrayLike, p: MrrParams) -> ArrayLike:
    """Phase that programs an add-drop ring to weight ``2 T_d - 1 = f_star``.

    Raises:
        DeviceRangeError: For f* = -1 (pole), |f*| > 1, or f* outside the
            achievable interval of the ring
    """
    f = np.asarray(f_star, dtype=float)
    interval = weight_interval(p)
    if np.any(f == -1.0):
        raise DeviceRangeError("weight -1 is a pole of the drop-port inversion", -1.0, interval)
    if np.any((f < -1.0) | (f > 1.0)):
        first = float(np.broadcast_to(f, np.shape(f))[(f < -1.0) | (f > 1.0)].flat[0])
        raise DeviceRangeError(f"weight {first:.6g} outside [-1, 1]", first, interval)

    c0, c1, div = _weight_coefficients(p)
    arg = (c0 - c1 / (f + 1.0)) / div
    return _out(_checked_arccos(arg, f, interval, "weight"))


# ---------------------------------------------------------------------------
# Curve sampling
# ---------------------------------------------------------------------------

@dataclass
class DeviceCurve:
    """Sampled transfer functions of one parameter set.

    Attributes:
        phi: Sample phases (radians)
        t_n: All-pass transmission
        t_p: Add-drop through transmission
        t_d: Add-drop drop transmission
        mode: Equation mode the curves were evaluated in
        balanced: Optional balanced photodiode output g (T_d - T_p)
        nonphysical: Number of samples that hit the denominator guard or left [0, 1]
    """
    phi: np.ndarray
    t_n: np.ndarray
    t_p: np.ndarray
    t_d: np.ndarray
    mode: EquationMode
    balanced: Optional[np.ndarray] = None
    nonphysical: int = 0

    @property
    def columns(self) -> List[str]:
        cols = ["phi", "T_n", "T_p", "T_d", "mode"]
        if self.balanced is not None:
            cols.append("balanced")
        return cols

    def rows(self) -> List[Dict[str, Any]]:
        """CSV-ready rows; guarded samples are written as ``nan``."""
        out = []
        for i in range(len(self.phi)):
            row: Dict[str, Any] = {
                "phi": f"{self.phi[i]:.12g}",
                "T_n": f"{self.t_n[i]:.12g}",
                "T_p": f"{self.t_p[i]:.12g}",
                "T_d": f"{self.t_d[i]:.12g}",
                "mode": self.mode.value,
            }
            if self.balanced is not None:
                row["balanced"] = f"{self.balanced[i]:.12g}"
            out.append(row)
        return out


def sample_curves(p: MrrParams, samples: int = 1000, balanced_gain: Optional[float] = None) -> DeviceCurve:
    """Sample T_n, T_p and T_d over phi in [0, 2 pi].

    Samples where the add-drop denominator falls under the guard are recorded
    as NaN instead of raising, so a full sweep can be written out.

    Args:
        p: Ring parameters
        samples: Number of phases
        balanced_gain: If given, also sample g (T_d - T_p) with this gain

    Returns:
        DeviceCurve with the sampled values
    """
    if samples < 2:
        raise ContractError(f"need at least 2 samples, got {samples}")

    phi = np.linspace(0.0, 2.0 * math.pi, samples)
    t_n = np.asarray(allpass_transmission(phi, p))

    c = np.cos(phi)
    r2 = p.r * p.r
    den = _adddrop_denominator(c, p)
    guarded = den <= DENOMINATOR_FLOOR
    safe_den = np.where(guarded, np.nan, den)
    t_p = ((p.a * p.r) ** 2 - 2.0 * r2 * c + r2) / safe_den
    t_d = _drop_numerator(p) / safe_den

    out_of_range = guarded | (t_p < 0) | (t_p > 1) | (t_d < 0) | (t_d > 1)
    nonphysical = int(np.count_nonzero(out_of_range))
    if nonphysical:
        logger.warning(
            f"{nonphysical}/{samples} samples are non-physical for r={p.r}, a={p.a}, mode={p.mode.value}"
        )

    balanced = None
    if balanced_gain is not None:
        balanced = balanced_gain * (t_d - t_p)

    return DeviceCurve(
        phi=phi, t_n=t_n, t_p=t_p, t_d=t_d, mode=p.mode, balanced=balanced, nonphysical=nonphysical
    )
