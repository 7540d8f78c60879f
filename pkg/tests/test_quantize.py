"""Scalar quantization: fit, round-trip error bound, degenerate dims."""

import numpy as np
import pytest

from refmed.quantize import QuantizationParams, dequantize, fit_quantization, quantize
from refmed.synthetic import random_unit_vectors


class TestFit:
    def test_full_range_scale(self):
        sample = np.array([[-1.0, -1.0], [1.0, 1.0]], dtype=np.float32)
        params = fit_quantization(sample, clip_quantile=1.0)
        assert params.scale == pytest.approx([2 / 255, 2 / 255])
        assert params.offset == pytest.approx([-1.0, -1.0])

    def test_degenerate_all_zero_round_trips_to_zero(self):
        sample = np.zeros((5, 4), dtype=np.float32)
        params = fit_quantization(sample)
        codes = quantize(sample, params)
        assert (codes == codes[0, 0]).all()  # all codes equal per dimension
        assert (dequantize(codes, params) == 0.0).all()

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            fit_quantization(np.zeros((0, 3), dtype=np.float32))

    def test_bad_quantile_rejected(self):
        sample = np.ones((2, 2), dtype=np.float32)
        for q in (0.5, 0.2, 1.01):
            with pytest.raises(ValueError):
                fit_quantization(sample, clip_quantile=q)

    def test_params_validate(self):
        with pytest.raises(ValueError):
            QuantizationParams(
                offset=np.zeros(3, np.float32), scale=np.zeros(3, np.float32)
            )


class TestRoundTrip:
    def test_reconstruction_error_bounded_by_scale(self):
        # 1,000 random unit vectors: per-component error <= the dimension's
        # scale for in-range components (quantile 1.0 makes every component
        # in range).
        vectors = random_unit_vectors(1000, 32, seed=3)
        params = fit_quantization(vectors, clip_quantile=1.0)
        recon = dequantize(quantize(vectors, params), params)
        err = np.abs(recon - vectors)
        assert (err <= params.scale[None, :] + 1e-7).all()

    def test_clipped_components_clamp_to_range(self):
        rng = np.random.default_rng(0)
        sample = rng.normal(size=(500, 8)).astype(np.float32)
        params = fit_quantization(sample, clip_quantile=0.99)
        recon = dequantize(quantize(sample, params), params)
        hi = params.offset + params.scale * 255
        assert (recon <= hi + 1e-6).all()
        assert (recon >= params.offset - 1e-6).all()

    def test_codes_are_int8(self):
        vectors = random_unit_vectors(10, 16, seed=1)
        params = fit_quantization(vectors)
        codes = quantize(vectors, params)
        assert codes.dtype == np.int8

    def test_single_vector_shape(self):
        vectors = random_unit_vectors(10, 16, seed=2)
        params = fit_quantization(vectors)
        one = quantize(vectors[0], params)
        assert one.shape == (16,)
        assert np.array_equal(one, quantize(vectors, params)[0])

    def test_deterministic(self):
        vectors = random_unit_vectors(50, 8, seed=4)
        p1 = fit_quantization(vectors)
        p2 = fit_quantization(vectors)
        assert np.array_equal(p1.offset, p2.offset)
        assert np.array_equal(p1.scale, p2.scale)
        assert np.array_equal(quantize(vectors, p1), quantize(vectors, p2))
