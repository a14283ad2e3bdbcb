"""802.11a OFDM physical layer: rates, PPDU airtime, channel masks, two-ray path loss."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import ConfigError, MisuseError

SPEED_OF_LIGHT = 299_792_458.0

PREAMBLE_US = 16
SIGNAL_US = 4
SYMBOL_US = 4
SERVICE_BITS = 16
TAIL_BITS = 6

# Minimum SNR (dB) per rate. Monotone in rate; overridable from the scenario.
DEFAULT_MIN_SNR_DB = {
    6: 6.0,
    9: 7.8,
    12: 9.0,
    18: 10.8,
    24: 17.0,
    36: 18.8,
    48: 24.0,
    54: 24.6,
}

RATES_MBPS = tuple(sorted(DEFAULT_MIN_SNR_DB))


@dataclass(frozen=True)
class PhyMode:
    data_rate: int  # Mbit/s
    data_bits_per_symbol: int
    min_rx_snr: float  # dB

    def __post_init__(self):
        if self.data_rate not in RATES_MBPS:
            raise ConfigError(f"unsupported 802.11a rate {self.data_rate} Mbit/s")
        if self.data_bits_per_symbol != self.data_rate * SYMBOL_US:
            raise ConfigError(
                f"{self.data_rate} Mbit/s needs {self.data_rate * SYMBOL_US} bits/symbol"
            )


def phy_mode(rate: int, min_snr: dict[int, float] | None = None) -> PhyMode:
    table = DEFAULT_MIN_SNR_DB if min_snr is None else min_snr
    if rate not in table:
        raise ConfigError(f"unsupported 802.11a rate {rate} Mbit/s")
    return PhyMode(rate, rate * SYMBOL_US, float(table[rate]))


def mode_table(min_snr: dict[int, float] | None = None) -> dict[int, PhyMode]:
    return {r: phy_mode(r, min_snr) for r in RATES_MBPS}


def ppdu_duration(mpdu_bytes: int, mode: PhyMode) -> int:
    """Airtime of one PPDU in microseconds."""
    if mpdu_bytes < 0:
        raise MisuseError("mpdu_bytes must be non-negative")
    data_bits = SERVICE_BITS + 8 * mpdu_bytes + TAIL_BITS
    n_sym = -(-data_bits // mode.data_bits_per_symbol)
    return PREAMBLE_US + SIGNAL_US + SYMBOL_US * n_sym


@dataclass(frozen=True)
class Ppdu:
    mpdu_bytes: int
    mode: PhyMode
    preamble_us: int = PREAMBLE_US
    signal_header_us: int = SIGNAL_US
    service_bits: int = SERVICE_BITS
    tail_bits: int = TAIL_BITS
    pad_bits: int = field(init=False)

    def __post_init__(self):
        used = self.service_bits + 8 * self.mpdu_bytes + self.tail_bits
        pad = (-used) % self.mode.data_bits_per_symbol
        object.__setattr__(self, "pad_bits", pad)

    @property
    def data_field_bits(self) -> int:
        return self.service_bits + 8 * self.mpdu_bytes + self.tail_bits + self.pad_bits

    @property
    def n_symbols(self) -> int:
        return self.data_field_bits // self.mode.data_bits_per_symbol

    @property
    def duration(self) -> int:
        return self.preamble_us + self.signal_header_us + SYMBOL_US * self.n_symbols


@dataclass(frozen=True)
class ChannelMask:
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits <= 0b1111:
            raise ConfigError(f"channel mask must fit in 4 bits, got {self.bits:#b}")

    @classmethod
    def parse(cls, text: str | int) -> "ChannelMask":
        if isinstance(text, int):
            return cls(text)
        s = str(text).strip()
        if len(s) != 4 or set(s) - {"0", "1"}:
            raise ConfigError(f"channel mask must be four binary digits, got {text!r}")
        return cls(int(s, 2))

    def __str__(self):
        return format(self.bits, "04b")


def channels_compatible(a: ChannelMask, b: ChannelMask) -> bool:
    return (a.bits & b.bits) != 0


@dataclass(frozen=True)
class RadioConfig:
    tx_power: float = 39.0  # dBm
    antenna_gain: float = 15.0  # dBi
    carrier_freq: float = 5.7e9  # Hz
    antenna_height: float = 1.5  # m
    noise_floor: float = -96.0  # dBm
    cs_threshold: float = -82.0  # dBm, carrier-sense energy threshold

    def __post_init__(self):
        for name in ("tx_power", "antenna_gain", "noise_floor", "cs_threshold"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"radio.{name} must be finite")
        if self.carrier_freq <= 0:
            raise ConfigError("radio.carrier_freq must be positive")
        if self.antenna_height <= 0:
            raise ConfigError("radio.antenna_height must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq


def crossover_distance(cfg_tx: RadioConfig, cfg_rx: RadioConfig) -> float:
    return 4 * math.pi * cfg_tx.antenna_height * cfg_rx.antenna_height / cfg_tx.wavelength


def two_ray_rx_power(cfg_tx: RadioConfig, cfg_rx: RadioConfig, distance: float) -> float:
    """Received power in dBm.

    Friis free space below the crossover distance, ground-reflection d^-4 law
    at and beyond it. The two branches meet exactly at the crossover.
    """
    if not distance > 0:
        raise MisuseError(f"distance must be positive, got {distance}")
    gains_db = cfg_tx.tx_power + cfg_tx.antenna_gain + cfg_rx.antenna_gain
    d_c = crossover_distance(cfg_tx, cfg_rx)
    if distance < d_c:
        lam = cfg_tx.wavelength
        loss_db = 20.0 * math.log10(4 * math.pi * distance / lam)
    else:
        ht, hr = cfg_tx.antenna_height, cfg_rx.antenna_height
        loss_db = 40.0 * math.log10(distance) - 20.0 * math.log10(ht * hr)
    return gains_db - loss_db


# Thresholds are compared in dB after a subtraction; allow for the rounding
# of that subtraction so a receiver exactly at threshold decodes.
SNR_TOLERANCE_DB = 1e-9


class Reception(enum.Enum):
    DELIVERED = "delivered"
    LOST_SNR = "lost_snr"
    LOST_COLLISION = "lost_collision"


def reception_outcome(
    rx_power: float, mode: PhyMode, concurrent_overlap: bool, noise_floor: float
) -> Reception:
    if concurrent_overlap:
        return Reception.LOST_COLLISION
    if rx_power - noise_floor >= mode.min_rx_snr - SNR_TOLERANCE_DB:
        return Reception.DELIVERED
    return Reception.LOST_SNR
