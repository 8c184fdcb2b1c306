"""Sampled curves on [0, 1] and the two geometric transforms acting on them.

A :class:`Curve` stores heights on a uniform grid of ``N + 1`` points and is
evaluated by piecewise-linear interpolation. All curves of interest here are
concave, non-negative and vanish at both endpoints.

The L1 transform maps ``f`` to ``g(x) = HM(f(x_S), f(x_L))`` where ``x_S`` is
the smaller root of ``X + f(X) = x`` and ``x_L`` the larger root of
``X - f(X) = x``; iterating it from ``2X(1-X)`` gives the least achievable
max-score curves. The L2 transform uses the two roots of ``f(X) = (X - x)^2``
and the geometric mean instead.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .errors import CurveError, RootFindingError, UsageError

DEFAULT_RESOLUTION = 10_000

ROOT_TOL = 1e-12
ROOT_MAX_ITER = 200
CONCAVITY_TOL = 1e-9
SYMMETRY_TOL = 1e-9

Seed = Literal["C", "Cprime"]
BoundKind = Literal["L", "U", "G", "D", "Lprime"]


@dataclass(frozen=True, eq=False)
class Curve:
    """Heights of a function on the grid ``k / N``, ``k = 0..N``."""

    heights: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        h = np.array(self.heights, dtype=float)
        if h.ndim != 1 or h.size < 2:
            raise CurveError("a curve needs at least two grid heights")
        if not np.all(np.isfinite(h)):
            raise CurveError("curve heights must be finite")
        if h.min() < 0:
            raise CurveError(f"curve heights must be non-negative (min {h.min():.3g})")
        if h[0] != 0 or h[-1] != 0:
            raise CurveError("curve must vanish at both endpoints")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        if self.symmetric and np.max(np.abs(h - h[::-1])) > SYMMETRY_TOL:
            raise CurveError("curve flagged symmetric but heights are not mirror-equal")

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray],
                      resolution: int = DEFAULT_RESOLUTION, symmetric: bool = False) -> Curve:
        x = np.linspace(0.0, 1.0, resolution + 1)
        h = np.asarray(f(x), dtype=float)
        h[0] = h[-1] = 0.0
        return cls(np.maximum(h, 0.0), symmetric=symmetric)

    @property
    def resolution(self) -> int:
        return self.heights.size - 1

    @cached_property
    def grid(self) -> np.ndarray:
        g = np.linspace(0.0, 1.0, self.resolution + 1)
        g.setflags(write=False)
        return g

    def __call__(self, x):
        return evaluate(self, x)

    @cached_property
    def is_concave(self) -> bool:
        h = self.heights
        if h.size < 3:
            return True
        mid = 0.5 * (h[:-2] + h[2:])
        slack = CONCAVITY_TOL * (1.0 + np.abs(h[1:-1]))
        return bool(np.all(h[1:-1] >= mid - slack))

    def require_concave(self) -> None:
        if not self.is_concave:
            raise CurveError("operation requires a concave curve")

    def max_abs_diff(self, other: Curve) -> float:
        if other.resolution != self.resolution:
            raise CurveError("curves live on different grids")
        return float(np.max(np.abs(self.heights - other.heights)))

    # -- export -----------------------------------------------------------

    def to_csv(self, dest=None) -> str | None:
        """Write ``x,y`` rows with 12 significant digits.

        ``dest`` may be a path, an open text file, or None (returns the text).
        """
        buf = io.StringIO()
        buf.write("x,y\n")
        for x, y in zip(self.grid, self.heights):
            buf.write(f"{x:.12g},{y:.12g}\n")
        return _emit(buf.getvalue(), dest)

    def to_json(self, dest=None) -> str | None:
        text = json.dumps({"resolution": self.resolution,
                           "heights": [float(v) for v in self.heights]})
        return _emit(text, dest)

    @classmethod
    def from_json(cls, text: str, symmetric: bool = False) -> Curve:
        data = json.loads(text)
        heights = data["heights"]
        if len(heights) != data["resolution"] + 1:
            raise CurveError("resolution does not match the number of heights")
        return cls(np.asarray(heights, dtype=float), symmetric=symmetric)


def _emit(text: str, dest):
    if dest is None:
        return text
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)
    return None


def evaluate(curve: Curve, x):
    """Piecewise-linear value of ``curve`` at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0) or np.any(np.isnan(xa)):
        raise CurveError("curves are defined on [0, 1] only")
    y = np.interp(xa, curve.grid, curve.heights)
    return float(y) if y.ndim == 0 else y


def _interp(curve: Curve, x: np.ndarray) -> np.ndarray:
    return np.interp(x, curve.grid, curve.heights)


def _bisect(residual, lo, hi):
    """Vectorised bisection for the sign change of ``residual`` on ``[lo, hi]``.

    Requires ``residual(lo) <= 0 <= residual(hi)`` with a single crossing.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    out = np.empty_like(lo)
    active = np.ones(lo.shape, dtype=bool)
    for _ in range(ROOT_MAX_ITER):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        r = residual(mid, idx)
        hit = np.abs(r) <= ROOT_TOL
        out[idx[hit]] = mid[hit]
        active[idx[hit]] = False
        up = ~hit & (r > 0)
        down = ~hit & ~up
        hi[idx[up]] = mid[up]
        lo[idx[down]] = mid[down]
    if active.any():
        idx = np.nonzero(active)[0]
        mid = 0.5 * (lo[idx] + hi[idx])
        r = residual(mid, idx)
        if np.max(np.abs(r)) > 1e3 * ROOT_TOL:
            raise RootFindingError(f"bisection stalled with residual {np.max(np.abs(r)):.3g}")
        out[idx] = mid
    return out


def _as_points(x):
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0.0) or np.any(xa > 1.0) or np.any(np.isnan(xa)):
        raise CurveError("x must lie in [0, 1]")
    return xa


def _shape_like(x, values):
    return float(values[0]) if np.ndim(x) == 0 else values


def _left_roots(curve: Curve, x: np.ndarray) -> np.ndarray:
    return _bisect(lambda X, i: X + _interp(curve, X) - x[i], np.zeros_like(x), x)


def _right_roots(curve: Curve, x: np.ndarray) -> np.ndarray:
    return _bisect(lambda X, i: X - _interp(curve, X) - x[i], x, np.ones_like(x))


def solve_left(curve: Curve, x):
    """Smaller root ``x_S`` of ``X + f(X) = x``; lies in ``[0, x]``."""
    curve.require_concave()
    xa = _as_points(x)
    return _shape_like(x, _left_roots(curve, xa))


def solve_right(curve: Curve, x):
    """Larger root ``x_L`` of ``X - f(X) = x``; lies in ``[x, 1]``."""
    curve.require_concave()
    xa = _as_points(x)
    return _shape_like(x, _right_roots(curve, xa))


def _finish(values: np.ndarray, symmetric: bool) -> Curve:
    g = np.maximum(values, 0.0)
    g[0] = g[-1] = 0.0
    if symmetric:
        # bisection noise is ~1e-12; keep the flag honest without rewriting data
        symmetric = bool(np.max(np.abs(g - g[::-1])) <= SYMMETRY_TOL)
    return Curve(g, symmetric=symmetric)


def l1_transform(curve: Curve) -> Curve:
    """Harmonic-mean transform: heights at the 45-degree intersections through (x, 0)."""
    curve.require_concave()
    x = curve.grid
    y1 = _interp(curve, _left_roots(curve, x))
    y2 = _interp(curve, _right_roots(curve, x))
    s = y1 + y2
    safe = np.where(s > 0, s, 1.0)
    g = np.where(s > 0, 2.0 * y1 * y2 / safe, 0.0)
    return _finish(g, curve.symmetric)


def l2_roots(curve: Curve, x):
    """Both roots of ``f(X) = (X - x)^2`` bracketing ``x``."""
    curve.require_concave()
    xa = _as_points(x)
    lo = _bisect(lambda X, i: _interp(curve, X) - (X - xa[i]) ** 2, np.zeros_like(xa), xa)
    hi = _bisect(lambda X, i: (X - xa[i]) ** 2 - _interp(curve, X), xa, np.ones_like(xa))
    return _shape_like(x, lo), _shape_like(x, hi)


def l2_transform(curve: Curve) -> Curve:
    """Geometric-mean transform at the intersections with the parabola ``(X - x)^2``."""
    lo, hi = l2_roots(curve, curve.grid)
    g = np.sqrt(_interp(curve, lo) * _interp(curve, hi))
    return _finish(g, curve.symmetric)


# -- curve families ------------------------------------------------------------

def _parabola(scale: float, resolution: int) -> Curve:
    return Curve.from_function(lambda x: scale * x * (1.0 - x), resolution, symmetric=True)


_SEED_SCALE = {"C": 2.0, "Cprime": 1.0}
_iterates: dict[tuple[str, int], list[Curve]] = {}


def gap_curves(n: int, resolution: int = DEFAULT_RESOLUTION, seed: Seed = "C") -> list[Curve]:
    """``[f, T f, ..., T^(n-1) f]`` for the seed ``2X(1-X)`` ("C") or ``X(1-X)`` ("Cprime").

    Iterates are cached per (seed, resolution); the returned list is a copy.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if seed not in _SEED_SCALE:
        raise ValueError(f"unknown seed {seed!r}; expected 'C' or 'Cprime'")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    key = (seed, resolution)
    chain = _iterates.setdefault(key, [_parabola(_SEED_SCALE[seed], resolution)])
    while len(chain) < n:
        chain.append(l1_transform(chain[-1]))
    return chain[:n]


def clear_curve_cache() -> None:
    """Forget cached iterates (for cold-start timing)."""
    _iterates.clear()


def gap_curve(n: int, resolution: int = DEFAULT_RESOLUTION, seed: Seed = "C") -> Curve:
    return gap_curves(n, resolution, seed)[-1]


def l2_gap_curve(n: int, resolution: int = DEFAULT_RESOLUTION) -> Curve:
    """``T'^(n-1)`` applied to ``X(1-X)``, computed numerically."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c = _parabola(1.0, resolution)
    for _ in range(n - 1):
        c = l2_transform(c)
    return c


def bound_curve(kind: BoundKind, n: int, resolution: int = DEFAULT_RESOLUTION) -> Curve:
    """Closed-form comparison curves.

    ``L``: 2/sqrt(2n-1) X(1-X); ``U``: sqrt(X(1-X)/n); ``G``: a_n X(1-X) with
    a_1 = 2; ``D``: X(1-X)/n; ``Lprime``: sqrt(2/(n+1)) X(1-X).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "L":
        scale = 2.0 / math.sqrt(2 * n - 1)
    elif kind == "G":
        scale = float(a_sequence(2.0, n).values[-1])
    elif kind == "D":
        scale = 1.0 / n
    elif kind == "Lprime":
        scale = math.sqrt(2.0 / (n + 1))
    elif kind == "U":
        return Curve.from_function(lambda x: np.sqrt(x * (1.0 - x) / n), resolution, symmetric=True)
    else:
        raise UsageError(f"unknown bound kind {kind!r}")
    return _parabola(scale, resolution)


# -- the a_n recursion -----------------------------------------------------------

@dataclass(frozen=True)
class SequenceA:
    a1: float
    values: np.ndarray

    def lower_bounds(self) -> np.ndarray:
        """``1 / sqrt(1/a_1^2 + (k-1)/2)`` for ``k = 1..n``."""
        k = np.arange(1, self.values.size + 1)
        return 1.0 / np.sqrt(1.0 / self.a1 ** 2 + (k - 1) / 2.0)


def next_a(a: float) -> float:
    # 2(sqrt(a^2+1) - 1)/a, rewritten to avoid cancellation for small a
    return 2.0 * a / (math.sqrt(a * a + 1.0) + 1.0)


def a_sequence(seed: float, n: int) -> SequenceA:
    if seed <= 0:
        raise ValueError("seed must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    vals = np.empty(n)
    vals[0] = seed
    for k in range(1, n):
        vals[k] = next_a(vals[k - 1])
    vals.setflags(write=False)
    return SequenceA(float(seed), vals)
