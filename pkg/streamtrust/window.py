"""Fixed-capacity ring buffer of recent posteriors, features and predicted labels."""

from typing import NamedTuple

import numpy as np

from streamtrust.errors import DimensionMismatchError, InsufficientHistoryError


class LagEntry(NamedTuple):
    """One buffered step as returned by ``TemporalWindow.lag``."""

    posterior: np.ndarray
    feature: np.ndarray | None
    predicted_label: int


class TemporalWindow:
    """
    Ring buffer holding the last ``capacity`` steps.

    Storage is preallocated at construction, so the footprint depends only on
    (W, L, d') and push/lag are O(L + d') regardless of stream length.

    Example:
        >>> window = TemporalWindow(capacity=4, num_classes=3)
        >>> window.push(np.array([0.2, 0.5, 0.3]), predicted_label=1)
        >>> window.lag(1).predicted_label
        1
    """

    def __init__(self, capacity: int, num_classes: int, feature_dim: int = 0):
        if capacity < 1:
            raise ValueError(f"window capacity must be positive, got {capacity}")
        if num_classes < 1:
            raise ValueError(f"num_classes must be positive, got {num_classes}")
        if feature_dim < 0:
            raise ValueError(f"feature_dim must be >= 0, got {feature_dim}")
        self.capacity = capacity
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self._head = 0  # next slot to write
        self._count = 0
        self._labels = np.zeros(capacity, dtype=np.int64)
        self._allocate()

    def _allocate(self) -> None:
        self._posteriors = np.zeros((self.capacity, self.num_classes), dtype=np.float64)
        self._features = (
            np.zeros((self.capacity, self.feature_dim), dtype=np.float64)
            if self.has_features else None
        )

    @property
    def has_features(self) -> bool:
        return self.feature_dim > 0

    @property
    def filled_count(self) -> int:
        return self._count

    def __len__(self) -> int:
        return self._count

    def _check(self, posterior: np.ndarray, feature: np.ndarray | None) -> None:
        if posterior.shape != (self.num_classes,):
            raise DimensionMismatchError(
                f"posterior has length {posterior.size}, expected {self.num_classes}"
            )
        if self.has_features:
            if feature is None:
                raise DimensionMismatchError("window expects a feature vector, got none")
            if feature.shape != (self.feature_dim,):
                raise DimensionMismatchError(
                    f"feature has length {feature.size}, expected {self.feature_dim}"
                )

    def push(
        self,
        posterior: np.ndarray,
        feature: np.ndarray | None = None,
        predicted_label: int = 0,
    ) -> "TemporalWindow":
        """
        Append one step, evicting the oldest entry once the window is full.

        The feature argument is ignored when the window was built without
        features. On a dimension mismatch the window is left unchanged.

        Raises:
            DimensionMismatchError: If posterior or feature length differs from configuration
        """
        posterior = np.asarray(posterior, dtype=np.float64)
        if feature is not None:
            feature = np.asarray(feature, dtype=np.float64)
        self._check(posterior, feature)

        slot = self._head
        self._store(slot, posterior, feature if self.has_features else None)
        self._labels[slot] = predicted_label
        self._head = (slot + 1) % self.capacity
        if self._count < self.capacity:
            self._count += 1
        return self

    def _store(self, slot: int, posterior: np.ndarray, feature: np.ndarray | None) -> None:
        self._posteriors[slot] = posterior
        if feature is not None:
            self._features[slot] = feature  # type: ignore[index]

    def _slot(self, lag: int) -> int:
        if lag < 1 or lag > self._count:
            raise InsufficientHistoryError(
                f"lag {lag} requested but only {self._count} step(s) buffered"
            )
        return (self._head - lag) % self.capacity

    def lag(self, lag: int) -> LagEntry:
        """
        Return the entry pushed exactly ``lag`` pushes before the most recent one.

        Raises:
            InsufficientHistoryError: If fewer than ``lag`` entries are buffered
        """
        slot = self._slot(lag)
        feature = self._features[slot].copy() if self._features is not None else None
        return LagEntry(self._posteriors[slot].copy(), feature, int(self._labels[slot]))

    def available_lags(self, lag_set: tuple[int, ...]) -> list[int]:
        """Lags from ``lag_set`` that the current history can serve."""
        return [lag for lag in lag_set if lag <= self._count]

    @property
    def nbytes(self) -> int:
        """Bytes held by the buffer, cursor and counter."""
        total = self._labels.nbytes + self._posteriors.nbytes + 16
        if self._features is not None:
            total += self._features.nbytes
        return total
