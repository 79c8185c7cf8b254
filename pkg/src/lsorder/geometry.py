"""Fixed-point points in the unit cube plus the Euclidean helpers used by the oracles.

Comparator code only ever touches the integer coordinates; everything in here that
returns a float is meant for verification and packing, where explicit tolerances apply.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

W_DEFAULT = 52
MAX_DIM = 8


@dataclass(frozen=True)
class UnitPoint:
    """A point of [0,1)^d; ``coords[j]`` encodes ``coords[j] / 2**width``."""

    coords: tuple[int, ...]
    width: int = W_DEFAULT

    def __post_init__(self):
        if not 1 <= len(self.coords) <= MAX_DIM:
            raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {len(self.coords)}")
        limit = 1 << self.width
        for x in self.coords:
            if not 0 <= x < limit:
                raise ValueError(f"fixed-point coordinate {x} outside [0, 2^{self.width})")

    @property
    def d(self) -> int:
        return len(self.coords)

    @classmethod
    def from_floats(cls, xs: Iterable[float], width: int = W_DEFAULT) -> "UnitPoint":
        # floor, never round up: the result stays strictly below 1
        scale = 1 << width
        coords = []
        for x in xs:
            x = float(x)
            if not 0.0 <= x < 1.0:
                raise ValueError(f"coordinate {x} outside [0, 1)")
            coords.append(min(int(math.floor(x * scale)), scale - 1))
        return cls(tuple(coords), width)

    def to_floats(self) -> tuple[float, ...]:
        scale = float(1 << self.width)
        return tuple(x / scale for x in self.coords)

    def shifted(self, shift: Sequence[int]) -> "ShiftedPoint":
        return ShiftedPoint(tuple(x + s for x, s in zip(self.coords, shift)), self.width)


@dataclass(frozen=True)
class ShiftedPoint:
    """A unit point plus a diagonal shift: values in [0,2), one integer bit above ``width``."""

    coords: tuple[int, ...]
    width: int = W_DEFAULT

    def __post_init__(self):
        limit = 2 << self.width
        for x in self.coords:
            if not 0 <= x < limit:
                raise ValueError(f"shifted coordinate {x} outside [0, 2^{self.width + 1})")

    def to_floats(self) -> tuple[float, ...]:
        scale = float(1 << self.width)
        return tuple(x / scale for x in self.coords)


@dataclass(frozen=True)
class Direction:
    components: tuple[float, ...]

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.components))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"direction must have unit norm, got {norm!r}")

    @classmethod
    def normalized(cls, v: Sequence[float]) -> "Direction":
        v = np.asarray(v, dtype=float)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValueError("zero vector has no direction")
        return cls(tuple(float(c) for c in v / n))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)


@dataclass(frozen=True)
class Segment:
    a: tuple[float, ...]
    b: tuple[float, ...]


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def _same_dim(*vs: np.ndarray) -> None:
    if len({v.shape[-1] for v in vs}) != 1:
        raise ValueError("dimension mismatch: " + ", ".join(str(v.shape[-1]) for v in vs))


def dist(p, q) -> float:
    p, q = _vec(p), _vec(q)
    _same_dim(p, q)
    return float(np.linalg.norm(p - q))


def dist_point_segment(u, s: Segment) -> float:
    u, a, b = _vec(u), _vec(s.a), _vec(s.b)
    _same_dim(u, a, b)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(u - a))
    t = min(1.0, max(0.0, float((u - a) @ ab) / denom))
    return float(np.linalg.norm(u - (a + t * ab)))


def in_hippodrome(u, s: Segment, r: float) -> bool:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return dist_point_segment(u, s) <= r


def _unit(v) -> np.ndarray:
    if isinstance(v, Direction):
        return v.as_array()
    v = _vec(v)
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise ValueError("projection direction must be a unit vector")
    return v


def project(v, p) -> np.ndarray:
    """Project ``p`` onto the hyperplane through the origin orthogonal to ``v``."""
    v = _unit(v)
    p = _vec(p)
    _same_dim(v, p)
    return p - v * float(p @ v)


def projected_dist(v, p, q) -> float:
    return float(np.linalg.norm(project(v, p) - project(v, q)))


def segment_distances(us: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised distance of each row of ``us`` to the closed segment ``ab``."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(us - a, axis=1)
    t = np.clip((us - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(us - (a + t[:, None] * ab), axis=1)


def read_points(lines: Iterable[str]) -> list[tuple[float, ...]]:
    """Parse the point text format: whitespace-separated decimals, '#' comments."""
    out = []
    dim = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            xs = tuple(float(tok) for tok in line.split())
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if dim is None:
            dim = len(xs)
        elif len(xs) != dim:
            raise ValueError(f"line {lineno}: expected {dim} coordinates, got {len(xs)}")
        out.append(xs)
    return out


def write_points(points: Iterable[Sequence[float]]) -> str:
    return "".join(" ".join(repr(float(x)) for x in p) + "\n" for p in points)
