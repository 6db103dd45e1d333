import logging
from fractions import Fraction
import numpy as np
from src.core.channel import BitStream

logger = logging.getLogger(__name__)


class ChannelCoder:
    """Interfaz de codificación de canal: decode(encode(b)) == b sin ruido."""
    code_rate = Fraction(1)
    name = "identity"

    def encode(self, bits):
        return np.asarray(bits, dtype=np.uint8)

    def decode(self, bits):
        return np.asarray(bits, dtype=np.uint8)


class IdentityCoder(ChannelCoder):
    pass


class RepetitionCoder(ChannelCoder):
    """Repite cada bit k veces y decide por mayoría (k impar)."""

    def __init__(self, k):
        if k < 1 or k % 2 == 0:
            raise ValueError(f"La repetición requiere k impar >= 1, se recibió k={k}")
        self.k = int(k)
        self.code_rate = Fraction(1, self.k)
        self.name = f"repetition:{self.k}"

    def encode(self, bits):
        return np.repeat(np.asarray(bits, dtype=np.uint8), self.k)

    def decode(self, bits):
        votes = np.asarray(bits, dtype=np.uint8).reshape(-1, self.k).sum(axis=1)
        return (votes > self.k // 2).astype(np.uint8)


def parse_coder(descriptor):
    """'identity' | 'repetition:k' -> ChannelCoder."""
    descriptor = (descriptor or "identity").strip().lower()
    if descriptor == "identity":
        return IdentityCoder()
    if descriptor.startswith("repetition:"):
        try:
            k = int(descriptor.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"Coder mal formado: {descriptor}") from None
        return RepetitionCoder(k)
    raise ValueError(f"Coder desconocido: {descriptor}")


def coder_encode(stream, coder):
    """Codifica segmento a segmento; la tabla de segmentos se escala por 1/code_rate."""
    factor = int(1 / coder.code_rate)
    return BitStream(coder.encode(stream.bits), stream.segments * factor)


def coder_decode(stream, coder):
    factor = int(1 / coder.code_rate)
    return BitStream(coder.decode(stream.bits), stream.segments // factor)
