"""Tests for feature projection, pooling and int8 quantization."""

import unittest

import numpy as np

from streamtrust.errors import DimensionMismatchError
from streamtrust.features import FeatureProjector, global_average_pool, project, quantize_feature


class TestFeatureProjector(unittest.TestCase):

    def test_deterministic_from_seed(self):
        a = FeatureProjector.from_seed(32, 16, seed=3)
        b = FeatureProjector.from_seed(32, 16, seed=3)
        np.testing.assert_array_equal(a.matrix, b.matrix)
        self.assertEqual((a.in_dim, a.out_dim), (32, 16))

    def test_project(self):
        projector = FeatureProjector.from_seed(8, 4, seed=1)
        x = np.arange(8, dtype=float)
        np.testing.assert_allclose(project(projector, x), projector.matrix @ x)

    def test_wrong_length(self):
        projector = FeatureProjector.from_seed(8, 4, seed=1)
        with self.assertRaises(DimensionMismatchError):
            projector.project(np.ones(5))

    def test_invalid_dims(self):
        with self.assertRaises(ValueError):
            FeatureProjector.from_seed(0, 4, seed=1)


class TestPooling(unittest.TestCase):

    def test_channel_means(self):
        fmap = np.array([[1.0, 2.0], [3.0, 6.0]])
        np.testing.assert_array_equal(global_average_pool(fmap), [2.0, 4.0])

    def test_rejects_bad_shapes(self):
        with self.assertRaises(ValueError):
            global_average_pool(np.ones(3))
        with self.assertRaises(ValueError):
            global_average_pool(np.ones((0, 3)))


class TestQuantizeFeature(unittest.TestCase):

    def test_peak_maps_to_127(self):
        codes, scale = quantize_feature(np.array([0.5, -2.0, 1.0]))
        self.assertEqual(codes.dtype, np.int8)
        self.assertEqual(int(codes[1]), -127)
        self.assertAlmostEqual(scale, 2.0 / 127)

    def test_zero_vector(self):
        codes, scale = quantize_feature(np.zeros(4))
        np.testing.assert_array_equal(codes, np.zeros(4))
        self.assertEqual(scale, 1.0)

    def test_reconstruction_error(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            f = rng.standard_normal(16)
            codes, scale = quantize_feature(f)
            err = np.max(np.abs(codes.astype(float) * scale - f))
            self.assertLessEqual(err, scale / 2 + 1e-12)


if __name__ == "__main__":
    unittest.main()
