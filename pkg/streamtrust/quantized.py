"""Integer-friendly kernels: 8-bit posteriors, table logarithm, integer cosine."""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from streamtrust.config import SignalConfig
from streamtrust.errors import DimensionMismatchError
from streamtrust.features import quantize_feature
from streamtrust.models import LN2, SignalVector
from streamtrust.signals import confidence_proxy, temporal_signals
from streamtrust.window import TemporalWindow


UINT8_MAX = 255
# inputs below this are clamped before lookup
LUT_FLOOR = 2.0 ** -60


@dataclass(frozen=True)
class QuantizedPosterior:
    """Posterior stored as uint8 codes with one per-tensor scale."""

    codes: np.ndarray
    scale: float

    def dequantize(self) -> np.ndarray:
        return self.codes.astype(np.float64) * self.scale

    @property
    def num_classes(self) -> int:
        return int(self.codes.size)


def quantize_posterior(p: np.ndarray) -> QuantizedPosterior:
    """
    Nearest codes with the largest entry anchored at 255.

    Codes are then moved by one step where rounding left the most residual,
    until they sum to round(1 / scale); the dequantized mass stays within
    half a step of one for any L.
    """
    p = np.asarray(p, dtype=np.float64)
    top = int(np.argmax(p))
    peak = float(p[top])
    scale = peak / UINT8_MAX if peak > 0.0 else 1.0 / UINT8_MAX
    exact = p / scale
    codes = np.rint(exact)
    codes[top] = UINT8_MAX
    residual = exact - codes
    residual[top] = 0.0
    surplus = int(codes.sum()) - int(round(1.0 / scale))
    if surplus > 0:
        codes[np.argsort(residual, kind="stable")[:surplus]] -= 1
    elif surplus < 0:
        codes[np.argsort(-residual, kind="stable")[:-surplus]] += 1
    codes = np.clip(codes, 0, UINT8_MAX).astype(np.uint8)
    return QuantizedPosterior(codes=codes, scale=scale)


class LogLUT:
    """
    Natural-log table over the mantissa range [0.5, 1].

    ``x = m * 2**e`` with m in [0.5, 1); ln x = table(m) + e * ln 2, where
    table(m) interpolates linearly between ``size + 1`` knots. The worst
    interpolation error is computed per segment when the table is built and
    exposed as ``error_bound``.
    """

    def __init__(self, size: int = 256):
        if size < 2:
            raise ValueError(f"LUT size must be >= 2, got {size}")
        self.size = size
        knots = 0.5 + 0.5 * np.arange(size + 1, dtype=np.float64) / size
        values = np.array([math.log(k) for k in knots], dtype=np.float64)
        values[-1] = 0.0
        self.knots = knots
        self.entries = values
        self.slopes = np.diff(values) * (2.0 * size)
        self.error_bound = self._segment_error_bound()

    def _segment_error_bound(self) -> float:
        # ln is concave: each chord under-estimates it, worst where 1/x equals the chord slope
        worst = 0.0
        for i in range(self.size):
            a, b = self.knots[i], self.knots[i + 1]
            slope = self.slopes[i]
            x_star = 1.0 / slope
            x_star = min(max(x_star, a), b)
            chord = self.entries[i] + slope * (x_star - a)
            worst = max(worst, math.log(x_star) - chord)
        return worst

    def lookup(self, x: np.ndarray) -> np.ndarray:
        """Vectorized table log for strictly positive inputs."""
        x = np.maximum(np.asarray(x, dtype=np.float64), LUT_FLOOR)
        mantissa, exponent = np.frexp(x)
        position = (mantissa - 0.5) * (2.0 * self.size)
        index = np.minimum(position.astype(np.int64), self.size - 1)
        frac = position - index
        return self.entries[index] + frac * (self.entries[index + 1] - self.entries[index]) + exponent * LN2


def lut_log(x: float, lut: LogLUT) -> float:
    """
    Table approximation of ln x.

    Raises:
        ValueError: If x is not a positive finite number
    """
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"lut_log needs x > 0, got {x}")
    return float(lut.lookup(np.array([x]))[0])


def _lut_kl_to_mixture(p: np.ndarray, log_p: np.ndarray, log_m: np.ndarray) -> float:
    return float(np.sum(np.where(p > 0.0, p * (log_p - log_m), 0.0)))


def _code_shares(p: QuantizedPosterior) -> np.ndarray:
    codes = p.codes.astype(np.float64)
    return codes / codes.sum()


def jsd_quantized(p: QuantizedPosterior, q: QuantizedPosterior, lut: LogLUT, epsilon: float = 1e-6) -> float:
    """
    JSD of two quantized posteriors using only table lookups, adds and multiplies.

    Both inputs are taken as code shares (codes over their sum), so the
    per-tensor scales drop out and each side is an exact simplex point.

    Raises:
        DimensionMismatchError: If the posteriors differ in length
    """
    if p.codes.shape != q.codes.shape:
        raise DimensionMismatchError(f"posterior lengths differ: {p.num_classes} vs {q.num_classes}")
    n = p.num_classes
    ps = (_code_shares(p) + epsilon) / (1.0 + n * epsilon)
    qs = (_code_shares(q) + epsilon) / (1.0 + n * epsilon)
    m = 0.5 * (ps + qs)
    # zero entries (epsilon = 0) are looked up at 1 and masked out
    log_p = lut.lookup(np.where(ps > 0.0, ps, 1.0))
    log_q = lut.lookup(np.where(qs > 0.0, qs, 1.0))
    log_m = lut.lookup(np.where(m > 0.0, m, 1.0))
    value = 0.5 * (_lut_kl_to_mixture(ps, log_p, log_m) + _lut_kl_to_mixture(qs, log_q, log_m))
    return min(max(value, 0.0), LN2)


def cosine_int(a: np.ndarray, b: np.ndarray, scale_a: float = 1.0, scale_b: float = 1.0) -> float:
    """
    Cosine of two integer vectors with 64-bit integer accumulation.

    int64 covers the wide-accumulator contract (2 * input width + log2(d')
    bits) for 8-bit inputs and any practical d'. The scales cancel in the
    ratio. The three sums are reduced by their common divisor before the one
    float division, so scaling both vectors by a positive integer leaves the
    result bit-identical.
    """
    if a.shape != b.shape:
        raise DimensionMismatchError(f"feature lengths differ: {a.size} vs {b.size}")
    ai = np.asarray(a, dtype=np.int64)
    bi = np.asarray(b, dtype=np.int64)
    dot = int(np.dot(ai, bi))
    na = int(np.dot(ai, ai))
    nb = int(np.dot(bi, bi))
    if na == 0 or nb == 0 or scale_a == 0.0 or scale_b == 0.0:
        return 0.0
    g = math.gcd(math.gcd(abs(dot), na), nb)
    dot, na, nb = dot // g, na // g, nb // g
    value = dot / math.sqrt(float(na) * float(nb))
    return min(max(value, -1.0), 1.0)


class QuantizedEntry(NamedTuple):
    """One buffered step of a QuantizedWindow."""

    posterior: QuantizedPosterior
    feature_codes: np.ndarray | None
    feature_scale: float
    predicted_label: int


class QuantizedWindow(TemporalWindow):
    """Ring buffer that stores posteriors as uint8 and features as int8 codes."""

    def _allocate(self) -> None:
        self._codes = np.zeros((self.capacity, self.num_classes), dtype=np.uint8)
        self._scales = np.zeros(self.capacity, dtype=np.float64)
        if self.has_features:
            self._feature_codes: np.ndarray | None = np.zeros((self.capacity, self.feature_dim), dtype=np.int8)
            self._feature_scales = np.zeros(self.capacity, dtype=np.float64)
        else:
            self._feature_codes = None
            self._feature_scales = np.zeros(0, dtype=np.float64)

    def _store(self, slot: int, posterior: np.ndarray, feature: np.ndarray | None) -> None:
        qp = quantize_posterior(posterior)
        self._codes[slot] = qp.codes
        self._scales[slot] = qp.scale
        if feature is not None and self._feature_codes is not None:
            codes, scale = quantize_feature(feature)
            self._feature_codes[slot] = codes
            self._feature_scales[slot] = scale

    def lag(self, lag: int) -> QuantizedEntry:  # type: ignore[override]
        slot = self._slot(lag)
        posterior = QuantizedPosterior(codes=self._codes[slot].copy(), scale=float(self._scales[slot]))
        if self._feature_codes is not None:
            return QuantizedEntry(
                posterior,
                self._feature_codes[slot].copy(),
                float(self._feature_scales[slot]),
                int(self._labels[slot]),
            )
        return QuantizedEntry(posterior, None, 1.0, int(self._labels[slot]))

    @property
    def nbytes(self) -> int:
        total = self._labels.nbytes + self._codes.nbytes + self._scales.nbytes + 16
        if self._feature_codes is not None:
            total += self._feature_codes.nbytes + self._feature_scales.nbytes
        return total


def compute_signals_quantized(
    window: QuantizedWindow,
    posterior: np.ndarray,
    feature: np.ndarray | None,
    predicted_label: int,
    cfg: SignalConfig,
    lut: LogLUT,
) -> SignalVector:
    """
    Signal vector on the quantized path.

    D_t and S_t compare the quantized current step with quantized history;
    the instantaneous proxy uses the float posterior of the current step.
    """
    current = np.asarray(posterior, dtype=np.float64)
    current_q = quantize_posterior(current)
    similarity = None
    if window.has_features:
        if feature is None:
            raise DimensionMismatchError("window expects a feature vector, got none")
        feature = np.asarray(feature, dtype=np.float64)
        if feature.shape != (window.feature_dim,):
            raise DimensionMismatchError(
                f"feature has length {feature.size}, expected {window.feature_dim}"
            )
        codes, scale = quantize_feature(feature)

        def similarity(e: QuantizedEntry) -> float:
            return cosine_int(codes, e.feature_codes, scale, e.feature_scale)  # type: ignore[arg-type]

    entries = [(lag, window.lag(lag)) for lag in window.available_lags(cfg.lag_set)]
    d, s, c = temporal_signals(
        entries, cfg,
        divergence=lambda e: jsd_quantized(current_q, e.posterior, lut, cfg.epsilon),
        similarity=similarity,
        current_label=predicted_label,
        label_of=lambda e: e.predicted_label,
    )
    return SignalVector(
        divergence=d,
        instability=min(max(1.0 - s, 0.0), 2.0),
        inconsistency=1.0 - c,
        proxy=confidence_proxy(current, cfg.proxy_blend),
    )
