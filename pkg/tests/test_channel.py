import numpy as np
import pytest
from src.core.channel import (QuantizationScheme, BitStream, ChannelRealization, sample_channel, bpsk_modulate,
                              bpsk_demodulate, round_robin_mapping, transmit, quantize_serialize,
                              deserialize_dequantize, theoretical_ber_rayleigh, monte_carlo_ber)
from src.core.coding import IdentityCoder, RepetitionCoder, parse_coder, coder_encode, coder_decode


def test_bpsk_mapping_and_coherent_detection():
    assert bpsk_modulate(np.array([1, 0, 1])).tolist() == [1.0, -1.0, 1.0]
    h = np.array([0.5 + 0.5j, -1.0j])
    y = h * np.array([1.0, -1.0])
    assert bpsk_demodulate(y, h).tolist() == [1, 0]


@pytest.mark.parametrize("snr_db", [0.0, 5.0, 10.0])
def test_monte_carlo_ber_matches_closed_form(snr_db):
    empirical = monte_carlo_ber(snr_db, 1_000_000, seed=2024)
    theory = float(theoretical_ber_rayleigh(snr_db))
    assert abs(empirical - theory) / theory < 0.05


def test_ber_decreases_with_snr():
    values = theoretical_ber_rayleigh([0.0, 5.0, 10.0, 20.0])
    assert (np.diff(values) < 0).all()
    assert theoretical_ber_rayleigh(0.0) == pytest.approx(0.5 * (1 - np.sqrt(0.5)))


def test_channel_gains_and_average_snr():
    channels = [sample_channel(4096, 10.0, seed=s) for s in range(100)]
    power = np.concatenate([np.abs(c.gains) ** 2 for c in channels])
    snr = np.concatenate([c.snr_linear for c in channels])
    assert abs(power.mean() - 1.0) < 0.01
    assert abs(10 * np.log10(snr.mean()) - 10.0) < 0.2
    assert channels[0].noise_power == pytest.approx(0.1)


def test_noiseless_channel_has_no_errors():
    channel = sample_channel(8, float("inf"), seed=1)
    assert channel.noise_power == 0.0
    assert np.isinf(channel.snr_linear).all()
    bits = BitStream.uniform(np.random.default_rng(0).integers(0, 2, 800), 50)
    result = transmit(bits, channel, seed=3)
    assert result.bit_errors == 0
    assert np.array_equal(result.received.bits, bits.bits)


def test_strong_subchannel_sees_fewer_errors():
    channel = ChannelRealization(gains=np.array([0.1, 2.0]), noise_power=1.0)
    bits = BitStream.uniform(np.random.default_rng(5).integers(0, 2, 20000), 2)
    result = transmit(bits, channel, mapping=[0, 1], seed=9)
    wrong = result.received.bits != bits.bits
    weak, strong = wrong[:10000].sum(), wrong[10000:].sum()
    assert weak > strong
    assert (result.subchannels[:10000] == 0).all() and (result.subchannels[10000:] == 1).all()


def test_errors_are_nested_across_snr():
    bits = BitStream.uniform(np.random.default_rng(1).integers(0, 2, 4096), 64)
    previous = None
    for snr in [0.5, 3.0, 8.0, 13.0]:
        channel = sample_channel(16, snr, seed=42)
        wrong = transmit(bits, channel, seed=43).received.bits != bits.bits
        if previous is not None:
            assert not (wrong & ~previous).any()
        previous = wrong


def test_round_robin_and_mapping_validation():
    assert round_robin_mapping(5, 2).tolist() == [0, 1, 0, 1, 0]
    channel = sample_channel(2, 10.0, seed=0)
    bits = BitStream.uniform(np.zeros(8), 4)
    with pytest.raises(ValueError):
        transmit(bits, channel, mapping=[0, 1], seed=0)
    with pytest.raises(ValueError):
        transmit(bits, channel, mapping=[0, 1, 2, 0], seed=0)
    with pytest.raises(ValueError):
        sample_channel(0, 10.0, seed=0)


def test_bitstream_requires_exact_segments():
    with pytest.raises(ValueError):
        BitStream.uniform(np.zeros(7), 2)
    with pytest.raises(ValueError):
        BitStream(np.zeros(4), [[0, 3]])


def test_quantization_extremes_and_step():
    scheme = QuantizationScheme(bits_per_scalar=8)
    stream, clamped = quantize_serialize([[-2.0], [2.0]], ["position"], scheme)
    assert clamped == 0
    assert stream.bits[:8].tolist() == [0] * 8 and stream.bits[8:].tolist() == [1] * 8

    rng = np.random.default_rng(3)
    values = rng.uniform(-180, 180, (200, 3))
    fields = ["euler"] * 3
    decoded, invalid = deserialize_dequantize(quantize_serialize(values, fields, scheme)[0], fields, scheme)
    assert invalid == 0
    assert np.abs(decoded - values).max() <= 360.0 / 255 / 2 + 1e-9


def test_quantization_clamps_out_of_range():
    scheme = QuantizationScheme()
    stream, clamped = quantize_serialize([[5.0, np.nan, 0.0]], ["position"] * 3, scheme)
    assert clamped == 2
    decoded, _ = deserialize_dequantize(stream, ["position"] * 3, scheme)
    assert decoded[0, 0] == pytest.approx(2.0)
    assert decoded[0, 1] == pytest.approx(-2.0)


def test_float32_layout_is_exact_and_substitutes_invalid():
    scheme = QuantizationScheme(layout="float32")
    values = np.array([[0.125, -1.5, 3.25]], dtype=np.float32).astype(float)
    stream, _ = quantize_serialize(values, ["position"] * 3, scheme)
    assert len(stream) == 96
    decoded, invalid = deserialize_dequantize(stream, ["position"] * 3, scheme)
    assert invalid == 0 and np.array_equal(decoded, values)

    # exponente todo unos: NaN o infinito
    bits = stream.bits.copy()
    bits[1:9] = 1
    decoded, invalid = deserialize_dequantize(BitStream.uniform(bits, 1), ["position"] * 3, scheme)
    assert invalid == 1
    assert decoded[0, 0] == 0.0


def test_color_fields_use_eight_bits():
    scheme = QuantizationScheme(bits_per_scalar=16)
    assert scheme.item_bits(["position"] * 3 + ["color"] * 3) == 72
    stream, _ = quantize_serialize([[0.0, 0.0, 0.0, 10, 128, 255]], ["position"] * 3 + ["color"] * 3, scheme)
    decoded, _ = deserialize_dequantize(stream, ["position"] * 3 + ["color"] * 3, scheme)
    assert np.allclose(decoded[0, 3:], [10.0, 128.0, 255.0])


@pytest.mark.parametrize("kwargs", [dict(bits_per_scalar=3), dict(bits_per_scalar=33), dict(layout="half"),
                                    dict(ranges={"position": (1.0, 1.0)})])
def test_quantization_scheme_validation(kwargs):
    with pytest.raises(ValueError):
        QuantizationScheme(**kwargs)


def test_parse_coder():
    assert isinstance(parse_coder("identity"), IdentityCoder)
    assert isinstance(parse_coder(None), IdentityCoder)
    coder = parse_coder("repetition:3")
    assert coder.k == 3 and coder.name == "repetition:3"
    for bad in ("repetition:2", "repetition:x", "hamming"):
        with pytest.raises(ValueError):
            parse_coder(bad)


def test_repetition_corrects_single_flips():
    coder = RepetitionCoder(3)
    bits = np.array([1, 0, 1, 1], dtype=np.uint8)
    coded = coder.encode(bits)
    coded[[0, 4, 8, 10]] ^= 1
    assert coder.decode(coded).tolist() == bits.tolist()


def test_repetition_bit_error_rate():
    p, n = 0.1, 300_000
    rng = np.random.default_rng(17)
    coder = RepetitionCoder(3)
    bits = rng.integers(0, 2, n, dtype=np.uint8)
    coded = coder.encode(bits)
    flipped = coded ^ (rng.random(len(coded)) < p).astype(np.uint8)
    error_rate = np.mean(coder.decode(flipped) != bits)
    assert error_rate == pytest.approx(3 * p ** 2 - 2 * p ** 3, abs=2e-3)


def test_coder_scales_segments():
    stream = BitStream.uniform(np.array([1, 0, 0, 1, 1, 1]), 2)
    coded = coder_encode(stream, RepetitionCoder(3))
    assert len(coded) == 18
    assert coded.segments.tolist() == [[0, 9], [9, 9]]
    decoded = coder_decode(coded, RepetitionCoder(3))
    assert np.array_equal(decoded.bits, stream.bits)
    assert decoded.segments.tolist() == stream.segments.tolist()
