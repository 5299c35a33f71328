"""Radar chirp/frame geometry and the derived range axis."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

SPEED_OF_LIGHT_M_S = 299_792_458.0


@dataclass(frozen=True)
class RadarConfig:
    """Chirp and frame geometry that fixes the range axis and slow-time rate.

    Defaults describe a 77 GHz module streaming one 256-sample chirp per
    frame at 20 frames/s: bandwidth 3.072 GHz, range bins of roughly 4.9 cm.
    Only the carrier and frame rate are tied to the target hardware; the
    chirp parameters are configurable.
    """

    carrier_hz: float = 77.0e9
    chirp_slope_hz_per_s: float = 60.0e12
    adc_rate_hz: float = 5.0e6
    samples_per_chirp: int = 256
    chirps_per_frame: int = 1
    frame_rate_hz: float = 20.0
    rx_channels: int = 1

    def __post_init__(self) -> None:
        for name in (
            "carrier_hz",
            "chirp_slope_hz_per_s",
            "adc_rate_hz",
            "samples_per_chirp",
            "chirps_per_frame",
            "frame_rate_hz",
            "rx_channels",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.frame_rate_hz * self.active_frame_duration_s > 1.0:
            raise ValueError("frames do not fit their repetition period")

    @property
    def bandwidth_hz(self) -> float:
        """Swept bandwidth covered by one chirp's sampled portion."""
        return self.chirp_slope_hz_per_s * self.samples_per_chirp / self.adc_rate_hz

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.carrier_hz

    @property
    def range_bin_spacing_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / (2.0 * self.bandwidth_hz)

    @property
    def chirp_duration_s(self) -> float:
        return self.samples_per_chirp / self.adc_rate_hz

    @property
    def active_frame_duration_s(self) -> float:
        return self.chirps_per_frame * self.chirp_duration_s

    @property
    def frame_period_s(self) -> float:
        return 1.0 / self.frame_rate_hz

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RadarConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown radar config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path) -> "RadarConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
