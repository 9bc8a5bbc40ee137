"""Parameter containers shared by the rate, power and optimisation models."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any


class PaKind(str, Enum):
    """Power amplifier families supported by the power model."""

    TPA = "tpa"
    ETPA = "etpa"

    @classmethod
    def parse(cls, value: str | PaKind) -> PaKind:
        if isinstance(value, PaKind):
            return value
        normalized = str(value).lower().replace("-", "").replace("_", "").strip()
        for kind in cls:
            if kind.value == normalized:
                return kind
        raise ValueError(f"unknown PA kind: {value!r} (expected 'tpa' or 'etpa')")


@dataclass(slots=True, frozen=True)
class PaModel:
    """Input-power law of the amplifier attached to each antenna.

    ``max_output_power`` is the PA rating ``P_max,PA`` in Watt. When it is
    ``None`` the rating follows the operating point with exactly
    ``papr_backoff_db`` of headroom, i.e. ``P_max,PA = p * 10**(backoff/10)``.
    """

    kind: PaKind = PaKind.TPA
    max_efficiency: float = 0.8
    epsilon: float = 0.0082
    max_output_power: float | None = None
    papr_backoff_db: float = 8.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PaKind.parse(self.kind))
        if not 0.0 < self.max_efficiency <= 1.0:
            raise ValueError("max_efficiency must lie in (0, 1]")
        if self.kind is PaKind.ETPA and self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive for an ET-PA")
        if self.max_output_power is not None and self.max_output_power <= 0.0:
            raise ValueError("max_output_power must be positive")
        if self.papr_backoff_db < 0.0:
            raise ValueError("papr_backoff_db must be non-negative")

    @property
    def backoff_factor(self) -> float:
        return 10.0 ** (self.papr_backoff_db / 10.0)

    def peak_power(self, p: float) -> float:
        """Return ``P_max,PA`` for an operating point ``p``."""

        if self.max_output_power is not None:
            return self.max_output_power
        return p * self.backoff_factor

    def transmit_limit(self) -> float:
        """Largest average output power allowed by the PAPR backoff."""

        if self.max_output_power is None:
            return math.inf
        return self.max_output_power / self.backoff_factor


def dbm_to_watt(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


@dataclass(slots=True, frozen=True)
class SystemParams:
    """Link, overhead and power-model constants of the simulated network.

    ``noise_power`` is the total noise over the bandwidth (``B * sigma^2``),
    used directly in the rate denominator. ``p_cod``/``p_dec`` are in W per
    bit/s and ``l_bs`` in flops/W.
    """

    bandwidth: float = 20e6
    noise_power: float = field(default_factory=lambda: dbm_to_watt(-96.0))
    coherence_symbols: float = 5000.0
    pilot_reuse: float = 7.0
    k_max: int = 76
    per_antenna_power: float = 0.1
    pa: PaModel = field(default_factory=PaModel)
    p_syn: float = 2.0
    p_bs: float = 1.0
    p_oth: float = 18.0
    p_cod: float = 0.1e-9
    p_dec: float = 0.8e-9
    l_bs: float = 12.8e9
    per_block_linear_processing: bool = True

    def __post_init__(self) -> None:
        if self.bandwidth <= 0.0:
            raise ValueError("bandwidth must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        for name in ("noise_power", "per_antenna_power", "p_syn", "p_bs", "p_oth", "p_cod", "p_dec"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.l_bs <= 0.0:
            raise ValueError("l_bs must be positive")
        if self.overhead_factor() <= 0.0:
            raise ValueError("pilot overhead alpha * k_max must stay below the coherence interval")

    def overhead_factor(self, k_max: int | None = None) -> float:
        """Fraction of the coherence block left for data, ``1 - alpha K_max / T_c``."""

        users = self.k_max if k_max is None else k_max
        return 1.0 - self.pilot_reuse * users / self.coherence_symbols

    @property
    def coding_coefficient(self) -> float:
        """``A = P_COD + P_DEC`` in W per bit/s."""

        return self.p_cod + self.p_dec

    def with_design(self, *, k_max: int, per_antenna_power: float) -> SystemParams:
        return replace(self, k_max=int(k_max), per_antenna_power=float(per_antenna_power))

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["pa"]["kind"] = self.pa.kind.value
        return data


__all__ = ["PaKind", "PaModel", "SystemParams", "dbm_to_watt"]
