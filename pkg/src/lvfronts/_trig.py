"""Real trigonometric series on a fixed period.

A :class:`TrigSeries` stores complex coefficients ``c[k]`` for ``k >= 0`` with

    f(t) = Re(c[0]) + 2 Re( sum_{k>=1} c[k] exp(i w k t) ),   w = 2 pi / T.

Everything periodic in the package (coefficients, orbits, eigenfunctions) is
carried in this form, so averages, antiderivatives and exponentially weighted
integrals are evaluated in closed form mode by mode.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

_RESOLVE_TOL = 1e-16
_MAX_SAMPLES = 1 << 16


class TrigSeries:
    __slots__ = ("c", "period")

    def __init__(self, coeffs, period: float):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        c[0] = c[0].real
        self.c = c
        self.period = float(period)

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, value: float, period: float) -> "TrigSeries":
        return cls([value], period)

    @classmethod
    def from_samples(cls, samples, period: float, tol: float = _RESOLVE_TOL) -> "TrigSeries":
        y = np.asarray(samples, dtype=float)
        n = y.size
        X = np.fft.rfft(y) / n
        if n % 2 == 0 and X.size > 1:
            X[-1] *= 0.5
        return cls(X, period).trimmed(tol)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], period: float,
                      n0: int = 64, tol: float = 1e-15) -> "TrigSeries":
        """Adaptive sampling: double the grid until the top quarter of the spectrum is negligible."""
        n = n0
        while True:
            t = np.arange(n) * (period / n)
            y = np.asarray(fn(t), dtype=float)
            if not np.all(np.isfinite(y)):
                from .errors import InvalidInputError
                raise InvalidInputError("non-finite samples while resolving a periodic function")
            X = np.fft.rfft(y) / n
            scale = max(np.max(np.abs(X)), 1e-300)
            tail = np.max(np.abs(X[3 * X.size // 4:]))
            if tail <= tol * scale or n >= _MAX_SAMPLES:
                return cls.from_samples(y, period)
            n *= 2

    def trimmed(self, tol: float = _RESOLVE_TOL) -> "TrigSeries":
        a = np.abs(self.c)
        scale = max(a.max(), 1e-300)
        keep = np.nonzero(a > tol * scale)[0]
        last = int(keep[-1]) + 1 if keep.size else 1
        return TrigSeries(self.c[:last], self.period)

    # basic properties ---------------------------------------------------
    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def nmodes(self) -> int:
        return self.c.size

    @property
    def mean(self) -> float:
        return float(self.c[0].real)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        shape = t.shape
        tf = t.reshape(-1)
        out = np.full(tf.shape, self.c[0].real)
        if self.c.size > 1:
            k = np.arange(1, self.c.size)
            # chunk so the phase matrix stays small
            step = max(1, 200000 // k.size)
            for s in range(0, tf.size, step):
                ph = np.exp(1j * self.omega * np.outer(tf[s:s + step], k))
                out[s:s + step] += 2.0 * (ph @ self.c[1:]).real
        return out.reshape(shape) if shape else float(out[0])

    def sample(self, m: int) -> np.ndarray:
        """Values on the uniform grid ``t_j = j T / m``."""
        if m >= 2 * self.c.size:
            return self._irfft(m)
        return self(np.arange(m) * (self.period / m))

    def _irfft(self, m: int) -> np.ndarray:
        K = self.c.size
        X = np.zeros(m // 2 + 1, dtype=complex)
        X[:K] = self.c
        if m % 2 == 0 and K == m // 2 + 1:
            X[-1] *= 2.0
        return np.fft.irfft(X * m, n=m)

    def max_on(self, m: int = 4096) -> float:
        return float(np.max(self.sample(max(m, 4 * self.c.size))))

    def min_on(self, m: int = 4096) -> float:
        return float(np.min(self.sample(max(m, 4 * self.c.size))))

    # calculus -----------------------------------------------------------
    def derivative(self) -> "TrigSeries":
        k = np.arange(self.c.size)
        return TrigSeries(1j * self.omega * k * self.c, self.period)

    def antiderivative(self) -> "TrigSeries":
        """Periodic antiderivative of the zero-mean part, vanishing at t = 0."""
        if self.c.size == 1:
            return TrigSeries([0.0], self.period)
        k = np.arange(1, self.c.size)
        ck = self.c[1:] / (1j * self.omega * k)
        c0 = -2.0 * ck.sum().real
        return TrigSeries(np.concatenate(([c0], ck)), self.period)

    def integral(self, t):
        """Exact ``int_0^t f(s) ds`` including the secular mean part."""
        return self.mean * np.asarray(t, dtype=float) + self.antiderivative()(t)

    def weighted_integral(self, rate: float, t):
        """Exact ``int_0^t exp(rate s) f(s) ds`` evaluated mode by mode."""
        t = np.asarray(t, dtype=float)
        shape = t.shape
        tf = t.reshape(-1)
        if rate == 0.0:
            j0 = tf.copy()
        else:
            j0 = np.expm1(rate * tf) / rate
        out = self.c[0].real * j0
        if self.c.size > 1:
            k = np.arange(1, self.c.size)
            z = rate + 1j * self.omega * k
            step = max(1, 200000 // k.size)
            for s in range(0, tf.size, step):
                J = np.expm1(np.outer(tf[s:s + step], z)) / z
                out[s:s + step] += 2.0 * (J @ self.c[1:]).real
        return out.reshape(shape) if shape else float(out[0])

    # algebra ------------------------------------------------------------
    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "TrigSeries":
        """Series of ``fn(f(t))`` for an elementwise ``fn``."""
        return TrigSeries.from_function(lambda t: fn(self.sample(t.size)), self.period,
                                        n0=max(64, 4 * self.c.size))

    def __mul__(self, other):
        if isinstance(other, TrigSeries):
            n0 = max(64, 2 * (self.c.size + other.c.size))
            return TrigSeries.from_function(lambda t: self.sample(t.size) * other.sample(t.size),
                                            self.period, n0=n0)
        return TrigSeries(self.c * float(other), self.period)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, TrigSeries):
            n = max(self.c.size, other.c.size)
            c = np.zeros(n, dtype=complex)
            c[:self.c.size] += self.c
            c[:other.c.size] += other.c
            return TrigSeries(c, self.period)
        c = self.c.copy()
        c[0] += float(other)
        return TrigSeries(c, self.period)

    __radd__ = __add__

    def __neg__(self):
        return TrigSeries(-self.c, self.period)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __truediv__(self, other):
        if isinstance(other, TrigSeries):
            n0 = max(64, 2 * (self.c.size + other.c.size))
            return TrigSeries.from_function(lambda t: self.sample(t.size) / other.sample(t.size),
                                            self.period, n0=n0)
        return TrigSeries(self.c / float(other), self.period)

    def exp(self) -> "TrigSeries":
        return self.map(np.exp)

    def __repr__(self) -> str:
        return f"TrigSeries(mean={self.mean:.6g}, modes={self.c.size}, T={self.period:g})"
