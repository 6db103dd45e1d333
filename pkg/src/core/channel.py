import math
import logging
from dataclasses import dataclass, field
import numpy as np
from src.config import Config

logger = logging.getLogger(__name__)

# Rangos por tipo de escalar
FIELD_RANGES = {
    "position": (-2.0, 2.0),
    "quaternion": (-1.0, 1.0),
    "euler": (-180.0, 180.0),
    "color": (0.0, 255.0),
}


@dataclass(frozen=True)
class QuantizationScheme:
    """Cuantización uniforme de punto fijo (o float32 binario con layout='float32')."""
    bits_per_scalar: int = Config.BITS_PER_SCALAR
    layout: str = "fixed"
    color_bits: int = Config.COLOR_BITS
    ranges: dict = field(default_factory=lambda: dict(FIELD_RANGES))

    def __post_init__(self):
        if not 4 <= self.bits_per_scalar <= 32:
            raise ValueError(f"bits_per_scalar fuera de [4, 32]: {self.bits_per_scalar}")
        if self.layout not in ("fixed", "float32"):
            raise ValueError(f"layout desconocido: {self.layout}")
        for name, (lo, hi) in self.ranges.items():
            if not lo < hi:
                raise ValueError(f"Rango inválido para {name}: [{lo}, {hi}]")

    def bits_for(self, field_name):
        if field_name == "color":
            return self.color_bits
        return 32 if self.layout == "float32" else self.bits_per_scalar

    def item_bits(self, fields):
        return sum(self.bits_for(f) for f in fields)


@dataclass
class BitStream:
    """Bits en orden de envío y tabla de segmentos (inicio, longitud) por ítem."""
    bits: np.ndarray
    segments: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        self.segments = np.asarray(self.segments, dtype=np.int64).reshape(-1, 2)
        if int(self.segments[:, 1].sum()) != len(self.bits):
            raise ValueError("La tabla de segmentos no cubre exactamente el flujo de bits")

    def __len__(self):
        return len(self.bits)

    @classmethod
    def uniform(cls, bits, n_items):
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        per_item = len(bits) // n_items if n_items else 0
        if per_item * n_items != len(bits):
            raise ValueError(f"{len(bits)} bits no se dividen en {n_items} ítems")
        starts = np.arange(n_items, dtype=np.int64) * per_item
        return cls(bits, np.column_stack([starts, np.full(n_items, per_item)]))


@dataclass(frozen=True)
class ChannelRealization:
    """Ganancias complejas por subcanal, potencia de ruido y potencia de transmisión (uniforme)."""
    gains: np.ndarray
    noise_power: float
    transmit_power: float = Config.TRANSMIT_POWER

    @property
    def n_subchannels(self):
        return len(self.gains)

    @property
    def snr_linear(self):
        """SNR por subcanal: P |h_i|^2 / sigma^2."""
        power = self.transmit_power * np.abs(self.gains) ** 2
        if self.noise_power == 0:
            return np.full(len(self.gains), np.inf)
        return power / self.noise_power

    @property
    def snr_db(self):
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.snr_linear)


@dataclass
class TransmitResult:
    received: BitStream
    subchannels: np.ndarray  # subcanal usado por cada bit
    bit_errors: int


def sample_channel(n_subchannels, snr_avg_db, seed):
    """
    Ganancias Rayleigh i.i.d. CN(0, 1). P y sigma^2 se fijan para que el SNR
    medio por subcanal sea el pedido. snr_avg_db = inf da el canal sin ruido.
    """
    if n_subchannels < 1:
        raise ValueError(f"n_subchannels debe ser >= 1: {n_subchannels}")
    rng = np.random.default_rng(seed)
    gains = (rng.standard_normal(n_subchannels) + 1j * rng.standard_normal(n_subchannels)) / np.sqrt(2.0)
    power = Config.TRANSMIT_POWER
    noise_power = 0.0 if math.isinf(snr_avg_db) else power / 10.0 ** (snr_avg_db / 10.0)
    return ChannelRealization(gains=gains, noise_power=noise_power, transmit_power=power)


def bpsk_modulate(bits):
    """1 -> +1, 0 -> -1."""
    b = bits.bits if isinstance(bits, BitStream) else np.asarray(bits)
    return 2.0 * b.astype(float) - 1.0


def bpsk_demodulate(received, gains):
    """Detección coherente: bit 1 si Re(y * conj(h)) >= 0."""
    decision = np.real(np.asarray(received) * np.conj(np.asarray(gains)))
    return (decision >= 0).astype(np.uint8)


def round_robin_mapping(n_items, n_subchannels):
    return np.arange(n_items) % n_subchannels


def transmit(bits, channel, mapping=None, seed=None):
    """
    Envía cada segmento por su subcanal: y = h_i * s + w, w ~ CN(0, sigma^2).
    El ruido es una secuencia normal unitaria escalada por sigma, de modo que
    la misma semilla a mayor SNR nunca añade errores.
    """
    n_items = len(bits.segments)
    if mapping is None:
        mapping = round_robin_mapping(n_items, channel.n_subchannels)
    mapping = np.asarray(mapping, dtype=int).reshape(-1)
    if len(mapping) < n_items:
        raise ValueError(f"El mapeo cubre {len(mapping)} ítems de {n_items}")
    if n_items and (mapping[:n_items].min() < 0 or mapping[:n_items].max() >= channel.n_subchannels):
        raise ValueError(f"El mapeo referencia un subcanal desconocido (hay {channel.n_subchannels})")

    # Subcanal de cada bit según su segmento
    starts, lengths = bits.segments[:, 0], bits.segments[:, 1]
    if np.array_equal(starts, np.cumsum(lengths) - lengths):
        per_bit = np.repeat(mapping[:n_items], lengths)
    else:
        per_bit = np.empty(len(bits), dtype=int)
        for (start, length), sub in zip(bits.segments, mapping[:n_items]):
            per_bit[start:start + length] = sub

    symbols = bpsk_modulate(bits) * np.sqrt(channel.transmit_power)
    h = channel.gains[per_bit]
    rng = np.random.default_rng(seed)
    unit_noise = (rng.standard_normal(len(bits)) + 1j * rng.standard_normal(len(bits))) / np.sqrt(2.0)
    y = h * symbols + np.sqrt(channel.noise_power) * unit_noise

    rx_bits = bpsk_demodulate(y, h)
    errors = int(np.count_nonzero(rx_bits != bits.bits))
    return TransmitResult(received=BitStream(rx_bits, bits.segments.copy()), subchannels=per_bit, bit_errors=errors)


def quantize_serialize(scalars, fields, scheme):
    """
    Escalares (n_items, len(fields)) -> BitStream con un segmento por ítem.
    Bits big-endian por escalar. Devuelve (bitstream, escalares recortados).
    """
    values = np.asarray(scalars, dtype=float).reshape(-1, len(fields))
    columns, clamped = [], 0
    for j, name in enumerate(fields):
        width = scheme.bits_for(name)
        column = values[:, j]
        if scheme.layout == "float32" and name != "color":
            codes = column.astype(">f4").view(">u4").astype(np.uint64)
        else:
            lo, hi = scheme.ranges[name]
            bad = ~np.isfinite(column) | (column < lo) | (column > hi)
            clamped += int(bad.sum())
            column = np.clip(np.nan_to_num(column, nan=lo), lo, hi)
            codes = np.rint((column - lo) / (hi - lo) * (2 ** width - 1)).astype(np.uint64)
        shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
        columns.append(((codes[:, None] >> shifts) & np.uint64(1)).astype(np.uint8))

    if clamped:
        logger.warning(f"{clamped} escalares fuera de rango fueron recortados al cuantizar")
    matrix = np.hstack(columns) if columns else np.zeros((len(values), 0), dtype=np.uint8)
    return BitStream.uniform(matrix.reshape(-1), len(values)), clamped


def deserialize_dequantize(bits, fields, scheme):
    """
    BitStream -> escalares (n_items, len(fields)). Los valores float32 no
    finitos se sustituyen por el centro del rango. Devuelve (escalares, sustituidos).
    """
    widths = [scheme.bits_for(f) for f in fields]
    per_item = sum(widths)
    raw = np.asarray(bits.bits if isinstance(bits, BitStream) else bits, dtype=np.uint64)
    if per_item == 0 or len(raw) % per_item:
        raise ValueError(f"{len(raw)} bits no encajan en ítems de {per_item} bits")
    matrix = raw.reshape(-1, per_item)

    values = np.empty((len(matrix), len(fields)))
    invalid, offset = 0, 0
    for j, (name, width) in enumerate(zip(fields, widths)):
        weights = np.uint64(1) << np.arange(width - 1, -1, -1, dtype=np.uint64)
        codes = (matrix[:, offset:offset + width] * weights).sum(axis=1)
        offset += width
        lo, hi = scheme.ranges[name]
        if scheme.layout == "float32" and name != "color":
            column = codes.astype(">u4").view(">f4").astype(float)
            bad = ~np.isfinite(column)
            invalid += int(bad.sum())
            column[bad] = (lo + hi) / 2.0
        else:
            column = lo + codes.astype(float) / (2 ** width - 1) * (hi - lo)
        values[:, j] = column
    return values, invalid


def theoretical_ber_rayleigh(snr_db):
    """BER de BPSK coherente en Rayleigh: 0.5 (1 - sqrt(g / (1 + g)))."""
    g = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    return 0.5 * (1.0 - np.sqrt(g / (1.0 + g)))


def monte_carlo_ber(snr_db, n_bits, seed, n_subchannels=Config.N_SUBCHANNELS, bits_per_subchannel=16):
    """
    BER empírica con desvanecimiento por bloques: cada bloque de
    n_subchannels * bits_per_subchannel bits ve una realización nueva.
    """
    block = n_subchannels * bits_per_subchannel
    n_blocks = -(-n_bits // block)
    seeds = np.random.SeedSequence(seed).generate_state(2 * n_blocks + 1)
    data_rng = np.random.default_rng(seeds[-1])
    errors = total = 0
    for b in range(n_blocks):
        bits = BitStream.uniform(data_rng.integers(0, 2, block, dtype=np.uint8), n_subchannels)
        channel = sample_channel(n_subchannels, snr_db, int(seeds[2 * b]))
        result = transmit(bits, channel, seed=int(seeds[2 * b + 1]))
        errors += result.bit_errors
        total += block
    return errors / total
