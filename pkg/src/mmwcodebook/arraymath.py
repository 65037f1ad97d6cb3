"""Complex array math for half-wave-spaced uniform linear arrays.

All angles live in the cosine-angle domain: a physical angle theta enters
every formula as cos(theta) in [-1, 1], and every array response is
2-periodic in it.  Antenna indexing is 1-based in the math (entry n carries
the phase ramp pi*(n-1)*omega); storage is plain 0-based numpy arrays.

All functions are pure; returned arrays are freshly allocated and marked
read-only so values can be shared across concurrent tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AngleInterval",
    "beam_gain",
    "beam_gains",
    "beam_pattern",
    "inf_norm_sq",
    "normalize",
    "phase_rotate",
    "response_matrix",
    "steering_vector",
    "wrap_angle",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_weights(w) -> np.ndarray:
    """Validate and coerce an antenna weight vector to complex128."""
    arr = np.asarray(w, dtype=np.complex128)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("weights must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError("weights must be finite")
    return arr


def wrap_angle(omega):
    """Wrap a cosine angle (scalar or array) into [-1, 1) by 2-periodicity."""
    om = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(om)):
        raise ValueError("cosine angles must be finite")
    return np.mod(om + 1.0, 2.0) - 1.0


def steering_vector(n: int, omega: float) -> np.ndarray:
    """Unit-norm steering vector: entry n is exp(j*pi*(n-1)*omega)/sqrt(N).

    `omega` outside [-1, 1) is wrapped rather than rejected; the response is
    2-periodic so the wrapped vector is the same vector.
    """
    if n < 1:
        raise ValueError(f"antenna count must be >= 1, got {n}")
    om = float(wrap_angle(omega))
    v = np.exp(1j * np.pi * np.arange(n) * om) / math.sqrt(n)
    return _freeze(v)


def response_matrix(omegas, n: int) -> np.ndarray:
    """exp(-j*pi*k*omega) for k = 0..n-1, one row per angle.

    Row g is the conjugated (unnormalized) array response at omegas[g], so
    `response_matrix(grid, n) @ w` evaluates the beam gain over a grid.
    Built by cumulative products: one exponential per angle instead of one
    per matrix entry, which matters on the dense quadrature grids.
    """
    om = np.atleast_1d(wrap_angle(omegas)).ravel()
    e = np.empty((om.size, n), dtype=np.complex128)
    e[:, 0] = 1.0
    if n > 1:
        z = np.exp(-1j * np.pi * om)
        for k in range(1, n):
            np.multiply(e[:, k - 1], z, out=e[:, k])
    return e


def beam_gains(w, omegas) -> np.ndarray:
    """Complex beam gain of `w` toward each cosine angle in `omegas`.

    A(w, omega) = sum_n [w]_n exp(-j*pi*(n-1)*omega) = sqrt(N) a(N,omega)^H w
    """
    w = as_weights(w)
    om = np.atleast_1d(wrap_angle(omegas)).ravel()
    if om.size * w.size <= (1 << 14):
        return _freeze(response_matrix(om, w.size) @ w)
    # dense grids: run the phase ramp in place instead of materializing the
    # (grid x antennas) response matrix
    z = np.exp(-1j * np.pi * om)
    acc = np.ones_like(z)
    out = np.full(om.size, w[0], dtype=np.complex128)
    term = np.empty_like(z)
    for k in range(1, w.size):
        np.multiply(acc, z, out=acc)
        np.multiply(acc, w[k], out=term)
        out += term
    return _freeze(out)


def beam_gain(w, omega: float) -> complex:
    """Beam gain toward a single cosine angle (see `beam_gains`)."""
    return complex(beam_gains(w, [omega])[0])


def beam_pattern(w, grid) -> np.ndarray:
    """|A(w, omega)|^2 sampled over a grid of cosine angles."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("angle grid must be non-empty")
    g = beam_gains(w, grid)
    return _freeze(np.abs(g) ** 2)


def phase_rotate(w, delta: float) -> np.ndarray:
    """Multiply entry n by exp(j*pi*(n-1)*delta), shifting the beam by delta.

    Entry moduli are preserved, so the 2-norm and the max entry power are
    unchanged and the whole pattern translates: |A(out, omega)| equals
    |A(w, omega - delta)|.
    """
    w = as_weights(w)
    d = float(wrap_angle(delta))
    return _freeze(w * np.exp(1j * np.pi * np.arange(w.size) * d))


def inf_norm_sq(w) -> float:
    """Largest entry power max_n |[w]_n|^2."""
    w = as_weights(w)
    return float(np.max(np.abs(w) ** 2))


def normalize(w, mode: str = "unit") -> np.ndarray:
    """Rescale weights: 'unit' for 2-norm 1, 'papc' for max |entry| = 1.

    'papc' scaling puts entries in units of the per-antenna amplitude limit,
    the convention used when comparing patterns under a per-antenna power
    constraint.
    """
    w = as_weights(w)
    if mode == "unit":
        s = np.linalg.norm(w)
    elif mode == "papc":
        s = np.max(np.abs(w))
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    if s == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return _freeze(w / s)


@dataclass(frozen=True)
class AngleInterval:
    """A coverage interval [start, start + width] in the cosine-angle domain."""

    start: float
    width: float

    def __post_init__(self):
        if not (-1.0 <= self.start < 1.0):
            raise ValueError(f"interval start must be in [-1, 1), got {self.start}")
        if not self.width > 0.0:
            raise ValueError(f"interval width must be positive, got {self.width}")
        if self.start + self.width > 1.0 + 1e-12:
            raise ValueError(
                f"interval [{self.start}, {self.start + self.width}] exceeds +1"
            )

    @property
    def end(self) -> float:
        return self.start + self.width

    @property
    def center(self) -> float:
        return self.start + self.width / 2.0

    def contains(self, omega: float) -> bool:
        return self.start <= omega <= self.end

    def shifted(self, delta: float) -> "AngleInterval":
        """Same-width interval with the start moved by delta (wrapped)."""
        return AngleInterval(float(wrap_angle(self.start + delta)), self.width)
