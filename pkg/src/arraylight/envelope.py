"""Drive-pulse envelopes f(t) with exact piecewise integrals.

An envelope is a piecewise-linear function of time with values in [0, 1].
Discontinuities (square pulses) are represented as zero-length jumps between
segments; integrators restart at those breakpoints.  The cumulative integral
of f^2, used by the pulse-shaping reparametrization, is evaluated in closed
form per segment so it carries no quadrature error.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["PulseEnvelope"]


class PulseEnvelope:
    """Piecewise-linear envelope f(t) in [0, 1].

    Internally a list of segments (t0, t1, f0, f1); the last segment may be
    half-infinite (constant continuation).  Evaluation is right-continuous
    at breakpoints.
    """

    def __init__(self, t0s, t1s, f0s, f1s):
        t0s = np.asarray(t0s, dtype=float)
        t1s = np.asarray(t1s, dtype=float)
        f0s = np.asarray(f0s, dtype=float)
        f1s = np.asarray(f1s, dtype=float)
        if not (len(t0s) == len(t1s) == len(f0s) == len(f1s)) or len(t0s) == 0:
            raise InvalidArgumentError("envelope needs at least one segment")
        if t0s[0] < 0.0:
            raise InvalidArgumentError("envelope must start at t >= 0")
        if np.any(t1s <= t0s):
            raise InvalidArgumentError("envelope segments must have t1 > t0")
        if np.any(t0s[1:] != t1s[:-1]):
            raise InvalidArgumentError("envelope segments must be contiguous")
        fmin = min(f0s.min(), f1s.min())
        fmax = max(f0s.max(), f1s.max())
        if fmin < 0.0 or fmax > 1.0 + 1e-12:
            raise InvalidArgumentError(
                f"envelope values must lie in [0, 1], got [{fmin:g}, {fmax:g}]"
            )
        if math.isinf(t1s[-1]) and f0s[-1] != f1s[-1]:
            raise InvalidArgumentError("infinite final segment must be constant")
        self._t0 = t0s
        self._t1 = t1s
        self._f0 = f0s
        self._f1 = f1s
        with np.errstate(invalid="ignore"):
            self._slope = np.where(
                np.isfinite(t1s), (f1s - f0s) / (t1s - t0s), 0.0
            )
        # cumulative integral of f^2 at segment starts, exact per segment
        L = np.where(np.isfinite(t1s), t1s - t0s, 0.0)
        s = self._slope
        seg = f0s**2 * L + f0s * s * L**2 + s**2 * L**3 / 3.0
        self._tau0 = np.concatenate([[0.0], np.cumsum(seg)[:-1]])

    # ---- constructors -------------------------------------------------

    @classmethod
    def constant(cls, value: float = 1.0) -> "PulseEnvelope":
        """Constant envelope f(t) = value for all t >= 0."""
        return cls([0.0], [math.inf], [value], [value])

    @classmethod
    def square(cls, t_w: float, high: float = 1.0, low: float = 0.0) -> "PulseEnvelope":
        """Square pulse: f = high on [0, t_w), then f = low."""
        if t_w <= 0:
            raise InvalidArgumentError("square pulse needs t_w > 0")
        return cls([0.0, t_w], [t_w, math.inf], [high, low], [high, low])

    @classmethod
    def from_samples(cls, t_grid, f_values) -> "PulseEnvelope":
        """Piecewise-linear interpolation of samples, constant past the end."""
        t = np.asarray(t_grid, dtype=float)
        f = np.asarray(f_values, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or len(t) < 2:
            raise InvalidArgumentError("need matching 1-d grids with >= 2 samples")
        if np.any(np.diff(t) <= 0):
            raise InvalidArgumentError("t_grid must be strictly increasing")
        t0 = np.concatenate([t[:-1], [t[-1]]])
        t1 = np.concatenate([t[1:], [math.inf]])
        f0 = np.concatenate([f[:-1], [f[-1]]])
        f1 = np.concatenate([f[1:], [f[-1]]])
        return cls(t0, t1, f0, f1)

    @classmethod
    def from_csv(cls, path) -> "PulseEnvelope":
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                try:
                    rows.append((float(parts[0]), float(parts[1])))
                except (ValueError, IndexError):
                    if rows:  # header allowed only before the data
                        raise InvalidArgumentError(
                            f"malformed envelope row in {path}: {line!r}")
        if len(rows) < 2:
            raise InvalidArgumentError(f"envelope file {path} needs columns t,f")
        data = np.asarray(rows)
        return cls.from_samples(data[:, 0], data[:, 1])

    # ---- queries ------------------------------------------------------

    @property
    def t_start(self) -> float:
        return float(self._t0[0])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self._t0, t, side="right") - 1, 0, len(self._t0) - 1)
        out = self._f0[k] + self._slope[k] * (t - self._t0[k])
        return out if out.ndim else float(out)

    def tau(self, t):
        """Cumulative integral of f^2 from t_start to t, exact."""
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self._t0, t, side="right") - 1, 0, len(self._t0) - 1)
        x = t - self._t0[k]
        f0, s = self._f0[k], self._slope[k]
        out = self._tau0[k] + f0 * f0 * x + f0 * s * x * x + s * s * x**3 / 3.0
        return out if out.ndim else float(out)

    def breakpoints(self, t_end: float) -> np.ndarray:
        """Interior segment boundaries in (t_start, t_end)."""
        b = self._t0[1:]
        return b[(b > self._t0[0]) & (b < t_end)]

    def is_constant(self) -> bool:
        return bool(np.all(self._f0 == self._f0[0]) and np.all(self._f1 == self._f0[0]))

    def constant_segments(self, t_end: float):
        """Split [t_start, t_end] into constant-f pieces, or None.

        Returns a list of (t0, t1, f) when every segment is flat (constant
        and square envelopes); None when the envelope genuinely ramps, in
        which case the spectral propagator does not apply.
        """
        if np.any(self._f0 != self._f1):
            return None
        out = []
        for t0, t1, f in zip(self._t0, self._t1, self._f0):
            lo, hi = max(t0, self._t0[0]), min(t1, t_end)
            if hi > lo:
                out.append((float(lo), float(hi), float(f)))
        if out and out[-1][1] < t_end:
            out[-1] = (out[-1][0], t_end, out[-1][2])
        return out

    def to_csv(self, path, t_grid, header_lines=()) -> None:
        t = np.asarray(t_grid, dtype=float)
        f = self(t)
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("t,f\n")
            for ti, fi in zip(t, f):
                fh.write(f"{ti:.17g},{fi:.17g}\n")
