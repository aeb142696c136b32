"""
Weight Bank - Photonic weight bank (PWB) dot products.

A PWB receives a wavelength-multiplexed line whose channels carry power
envelopes mu_i, weights each channel with an add-drop ring, and sums the
weighted powers on a balanced photodiode followed by a TIA.

Key Features:
- Weight normalization into ring-realizable values plus TIA gain
- Weight realization through the device inversion/forward pair
- Negative weights realized by the sign applied at the balanced detector
- Optional 7-bit style quantization of envelopes and weights
- Signed inputs through the (x + 1) / 2 envelope encoding and bias removal
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .config import MAX_WAVELENGTHS, MrrParams, QuantSpec
from .device import (
    adddrop_drop,
    allpass_phase_for_intensity,
    allpass_transmission,
    drop_phase_for_weight,
    intensity_interval,
)
from .errors import ContractError
from .quantization import apply_quant


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PwbConfig:
    """Configuration of one photonic weight bank.

    Attributes:
        weights_f: Real weights F_i, one per wavelength channel
        params: Ring parameters of the bank's add-drop rings
        responsivity_r0: Detector responsivity R_0 (normalized units)
        field_scale_e0: Source amplitude scale E_0 (normalized units)
        quant: Quantization of envelopes and normalized weights
        fast: Skip the device inversion/forward pair and use f* directly
        modulator_path: Realize envelopes through all-pass modulator rings
    """
    weights_f: np.ndarray
    params: MrrParams = field(default_factory=MrrParams)
    responsivity_r0: float = 1.0
    field_scale_e0: float = 1.0
    quant: QuantSpec = field(default_factory=QuantSpec)
    fast: bool = False
    modulator_path: bool = False

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights_f, dtype=float).ravel()
        if weights.size == 0:
            raise ContractError("a weight bank needs at least one weight")
        if weights.size > MAX_WAVELENGTHS:
            raise ContractError(
                f"{weights.size} weights exceed the {MAX_WAVELENGTHS} wavelengths of one line"
            )
        if not np.all(np.isfinite(weights)):
            raise ContractError("weights must be finite")
        object.__setattr__(self, "weights_f", weights)

    @property
    def e0r0(self) -> float:
        return self.field_scale_e0 * self.responsivity_r0


@dataclass(frozen=True)
class ProgrammedBank:
    """A weight bank after its rings have been tuned.

    Attributes:
        f_star: Realized normalized weights (what the detector sees)
        phases: Ring phases (NaN when the device path was skipped)
        polarity: Sign applied at the balanced detector
        g_tia: TIA gain restoring the weight scale
        e0r0: Product of source amplitude and detector responsivity
    """
    f_star: np.ndarray
    phases: np.ndarray
    polarity: np.ndarray
    g_tia: float
    e0r0: float = 1.0

    @property
    def size(self) -> int:
        return int(self.f_star.size)

    def photocurrent(self, mu: np.ndarray) -> np.ndarray:
        """Balanced photocurrent sum_i E0 R0 mu_i f*_i over the last axis.

        Channels are accumulated strictly in ascending index order.
        """
        products = self.e0r0 * np.asarray(mu, dtype=float) * self.f_star
        return np.cumsum(products, axis=-1)[..., -1]

    def dot(self, mu: np.ndarray) -> np.ndarray:
        """TIA output g * i_PD for one envelope vector or a stack of them."""
        return self.g_tia * self.photocurrent(mu)

    def bias(self) -> float:
        """Bias current g * sum_i (E0 R0 / 2) f*_i produced by the signed encoding."""
        half = 0.5 * self.e0r0 * self.f_star
        return float(self.g_tia * np.cumsum(half)[-1])


def normalize_weights(weights_f: Sequence[float] | np.ndarray) -> Tuple[np.ndarray, float]:
    """Split weights into ring-realizable values and a TIA gain.

    Args:
        weights_f: Real weights F_i

    Returns:
        (f_star, g_tia) with g_tia = max |F_i| and F_i = g_tia * f_star_i;
        an all-zero vector yields zeros and g_tia = 0

    Raises:
        ContractError: If the sequence is empty
    """
    weights = np.asarray(weights_f, dtype=float).ravel()
    if weights.size == 0:
        raise ContractError("cannot normalize an empty weight vector")
    g_tia = float(np.max(np.abs(weights)))
    if g_tia == 0.0:
        return np.zeros_like(weights), 0.0
    return weights / g_tia, g_tia


def program_bank(
    weights_f: Sequence[float] | np.ndarray,
    params: MrrParams,
    quant: QuantSpec,
    *,
    fast: bool = False,
    e0r0: float = 1.0,
) -> ProgrammedBank:
    """Normalize, quantize and realize a weight vector on add-drop rings.

    Each |f*| is converted to a ring phase with the drop-port inversion and
    read back through 2 T_d(phi) - 1, so device-range limits show up as
    errors. The sign of a negative weight is applied at the balanced detector.
    A weight that is exactly zero parks its ring and contributes nothing, with
    or without quantization.

    Raises:
        DeviceRangeError: If a normalized weight cannot be realized
    """
    f_star, g_tia = normalize_weights(weights_f)
    n = f_star.size
    if g_tia == 0.0:
        return ProgrammedBank(
            f_star=np.zeros(n), phases=np.full(n, np.nan), polarity=np.ones(n), g_tia=0.0, e0r0=e0r0
        )

    # 0 is not a level of an even-sized grid over [-1, 1]; parked rings stay at 0
    f_q = np.where(f_star == 0.0, 0.0, apply_quant(f_star, -1.0, 1.0, quant))
    polarity = np.where(f_q < 0, -1.0, 1.0)

    if fast:
        return ProgrammedBank(
            f_star=f_q, phases=np.full(n, np.nan), polarity=polarity, g_tia=g_tia, e0r0=e0r0
        )

    magnitude = np.abs(f_q)
    phases = np.asarray(drop_phase_for_weight(magnitude, params), dtype=float)
    realized = polarity * (2.0 * np.asarray(adddrop_drop(phases, params)) - 1.0)
    realized = np.where(f_q == 0.0, 0.0, realized)
    return ProgrammedBank(f_star=realized, phases=phases, polarity=polarity, g_tia=g_tia, e0r0=e0r0)


def check_envelopes(mu: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate power envelopes, which must lie in [0, 1]."""
    arr = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
        raise ContractError("power envelopes must lie in [0, 1]")
    return arr


def modulate_inputs(mu: np.ndarray, params: MrrParams) -> np.ndarray:
    """Realize envelopes on all-pass modulator rings.

    Targets outside the ring's achievable intensity interval are clipped to it
    before inversion, so a target of 1 comes out as T_n(pi).
    """
    lo, hi = intensity_interval(params)
    clipped = np.clip(np.asarray(mu, dtype=float), lo, hi)
    # the top of the interval is phi = pi; inverting it directly loses precision
    at_top = clipped >= hi
    phases = np.asarray(allpass_phase_for_intensity(np.where(at_top, lo, clipped), params), dtype=float)
    phases = np.where(at_top, math.pi, phases)
    return np.asarray(allpass_transmission(phases, params), dtype=float)


def realize_envelopes(
    mu: np.ndarray, quant: QuantSpec, params: MrrParams, modulator_path: bool = False
) -> np.ndarray:
    """Quantize envelopes over [0, 1] and optionally pass them through modulators."""
    out = apply_quant(mu, 0.0, 1.0, quant)
    if modulator_path:
        out = modulate_inputs(out, params)
    return out


def pwb_dot(inputs: Sequence[float] | np.ndarray, cfg: PwbConfig) -> float:
    """Simulated weight-bank dot product g_TIA * sum_i E0 R0 mu_i f*_i.

    With quantization off and E0 = R0 = 1 this equals sum_i mu_i F_i.

    Raises:
        ContractError: On length mismatch or envelopes outside [0, 1]
        DeviceRangeError: If a normalized weight is not realizable
    """
    mu = check_envelopes(inputs).ravel()
    if mu.size != cfg.weights_f.size:
        raise ContractError(f"{mu.size} envelopes for {cfg.weights_f.size} weights")

    mu = realize_envelopes(mu, cfg.quant, cfg.params, cfg.modulator_path)
    bank = program_bank(cfg.weights_f, cfg.params, cfg.quant, fast=cfg.fast, e0r0=cfg.e0r0)
    return float(bank.dot(mu))


def encode_signed_inputs(x: Sequence[float] | np.ndarray) -> np.ndarray:
    """Map signed inputs x in [-1, 1] onto envelopes mu = (x + 1) / 2."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any((arr < -1.0) | (arr > 1.0)):
        raise ContractError("signed inputs must lie in [-1, 1]")
    return (arr + 1.0) / 2.0


def signed_pwb_dot(x: Sequence[float] | np.ndarray, cfg: PwbConfig) -> float:
    """Dot product of signed inputs with the bank's weights.

    The envelope encoding halves the signal and adds a bias current
    g * sum_i (E0 R0 / 2) f*_i. The bias is subtracted after the TIA and the
    TIA gain is doubled, so the result is E0 R0 * (x . F).
    """
    mu = encode_signed_inputs(x).ravel()
    if mu.size != cfg.weights_f.size:
        raise ContractError(f"{mu.size} inputs for {cfg.weights_f.size} weights")

    mu = realize_envelopes(mu, cfg.quant, cfg.params, cfg.modulator_path)
    bank = program_bank(cfg.weights_f, cfg.params, cfg.quant, fast=cfg.fast, e0r0=cfg.e0r0)
    raw = float(bank.dot(mu))
    return 2.0 * (raw - bank.bias())
