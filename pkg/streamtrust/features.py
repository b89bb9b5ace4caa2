"""Offline feature compression applied before features enter the ring buffer."""

from dataclasses import dataclass

import numpy as np

from streamtrust.errors import DimensionMismatchError


INT8_MAX = 127


@dataclass(frozen=True)
class FeatureProjector:
    """Fixed 1x1 channel projection from ``in_dim`` to ``out_dim`` channels."""

    matrix: np.ndarray

    @classmethod
    def from_seed(cls, in_dim: int, out_dim: int, seed: int) -> "FeatureProjector":
        """Draw a Gaussian projection scaled by 1/sqrt(in_dim)."""
        if in_dim < 1 or out_dim < 1:
            raise ValueError(f"projection dims must be positive, got {in_dim}->{out_dim}")
        rng = np.random.default_rng(seed)
        matrix = rng.standard_normal((out_dim, in_dim)) / np.sqrt(in_dim)
        return cls(matrix=matrix)

    @property
    def in_dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.matrix.shape[0])

    def project(self, feature: np.ndarray) -> np.ndarray:
        feature = np.asarray(feature, dtype=np.float64)
        if feature.shape != (self.in_dim,):
            raise DimensionMismatchError(
                f"feature has length {feature.size}, projector expects {self.in_dim}"
            )
        return self.matrix @ feature


def project(projector: FeatureProjector, feature: np.ndarray) -> np.ndarray:
    return projector.project(feature)


def global_average_pool(feature_map: np.ndarray) -> np.ndarray:
    """Average a (positions, channels) map down to one value per channel."""
    feature_map = np.asarray(feature_map, dtype=np.float64)
    if feature_map.ndim != 2 or feature_map.shape[0] == 0:
        raise ValueError("feature map must be a non-empty (positions, channels) array")
    return feature_map.mean(axis=0)


def quantize_feature(feature: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Symmetric per-vector int8 quantization.

    Returns:
        (codes, scale) with feature ~= codes * scale; a zero vector maps to
        zero codes with scale 1.
    """
    feature = np.asarray(feature, dtype=np.float64)
    peak = float(np.max(np.abs(feature))) if feature.size else 0.0
    if peak == 0.0:
        return np.zeros(feature.shape, dtype=np.int8), 1.0
    scale = peak / INT8_MAX
    codes = np.clip(np.rint(feature / scale), -INT8_MAX, INT8_MAX).astype(np.int8)
    return codes, scale
