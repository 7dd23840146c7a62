"""
Test Suite for Field Serialization
Tests the GWF1 binary container and PGM/PPM export
"""

import numpy as np
import pytest

from geowarp.core.exceptions import ParseError
from geowarp.core.fields import (
    ImageBuffer,
    MaskField,
    ScalarField,
    decode_gwf,
    decode_pnm,
    encode_gwf,
    encode_pnm,
    read_gwf,
    write_gwf,
)
from geowarp.core.fields.io import normalized_for_display


class TestGwfContainer:
    """Test the GWF1 layout"""

    def test_header_layout(self):
        """Magic, then little-endian u32 height, width, channels"""
        payload = encode_gwf(ScalarField(np.zeros((2, 3))))
        assert payload[:4] == b"GWF1"
        assert np.frombuffer(payload[4:16], dtype="<u4").tolist() == [2, 3, 1]
        assert len(payload) == 16 + 4 * 6

    def test_float32_precision(self, tmp_path):
        """Values come back at float32 precision as (H, W, C)"""
        data = np.array([[0.1, 2.5], [-3.0, 1e6]])
        write_gwf(tmp_path / "f.gwf", ScalarField(data))
        decoded = read_gwf(tmp_path / "f.gwf")
        assert decoded.shape == (2, 2, 1)
        np.testing.assert_allclose(decoded[..., 0], data.astype(np.float32))

    def test_bad_magic(self):
        """Other containers are rejected"""
        with pytest.raises(ParseError, match="bad magic"):
            decode_gwf(b"GWF2" + bytes(12))

    def test_truncated_payload(self):
        """A short data section is reported with its offset"""
        payload = encode_gwf(ScalarField(np.ones((3, 3))))
        with pytest.raises(ParseError, match="size mismatch at byte 16"):
            decode_gwf(payload[:-4])


class TestPnm:
    """Test PGM/PPM export"""

    def test_ppm_keeps_rgb_order(self):
        """Channel order survives the BGR round trip"""
        data = np.zeros((2, 2, 3))
        data[..., 0] = 1.0
        decoded = decode_pnm(encode_pnm(ImageBuffer(data)))
        np.testing.assert_allclose(decoded[..., 0], 1.0)
        np.testing.assert_allclose(decoded[..., 1:], 0.0)

    def test_pgm_quantization(self, random_image):
        """8-bit PGM is within half a grey level"""
        decoded = decode_pnm(encode_pnm(random_image))
        assert np.abs(decoded - random_image.data).max() <= 0.5 / 255 + 1e-12

    def test_sixteen_bit_pgm(self):
        """maxval above 255 writes 16-bit samples"""
        field = ScalarField(np.array([[0.0, 0.5, 1.0]]), role="weight")
        decoded = decode_pnm(encode_pnm(field, maxval=65535))
        np.testing.assert_allclose(decoded[0, :, 0], [0.0, 0.5, 1.0], atol=1e-5)

    def test_mask_export(self):
        """Masks export as black and white"""
        decoded = decode_pnm(encode_pnm(MaskField(np.array([[1, 0]]))))
        np.testing.assert_array_equal(decoded[0, :, 0], [1.0, 0.0])

    def test_undecodable(self):
        """Garbage bytes are rejected"""
        with pytest.raises(ParseError, match="not a decodable"):
            decode_pnm(b"not an image")

    def test_display_normalization(self):
        """Depth previews span [0, 1]; constants map to 0"""
        scaled = normalized_for_display(ScalarField(np.array([[2.0, 4.0, 6.0]])))
        np.testing.assert_allclose(scaled, [[0.0, 0.5, 1.0]])
        assert not normalized_for_display(ScalarField(np.ones((2, 2)))).any()
