"""Influence functions psi(r) of the two admissible classes.

Type I kernels are positive everywhere and bounded; Type II kernels are
Lipschitz and vanish outside [0, 1].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

KINDS = ("type1_constant", "type1_exponential", "type2_tent", "type2_bump", "table")


class FloorVacuousWarning(RuntimeWarning):
    """The requested positive floor is zero because pairs can leave the kernel support."""


@dataclass(frozen=True)
class InfluenceKernel:
    kind: str
    lipschitz_bound: float
    sup_bound: float
    support_radius: float
    positive_floor: float
    value: float = 1.0
    lam: float = 1.0
    points: tuple[tuple[float, float], ...] = ()

    @property
    def kernel_type(self) -> str:
        return "I" if math.isinf(self.support_radius) else "II"

    @property
    def compact(self) -> bool:
        return not math.isinf(self.support_radius)

    def __call__(self, r):
        return eval_kernel(self, r)

    def _raw(self, r: np.ndarray) -> np.ndarray:
        if self.kind == "type1_constant":
            return np.full_like(r, self.value)
        if self.kind == "type1_exponential":
            return np.exp(-self.lam * r)
        if self.kind == "type2_tent":
            return np.maximum(0.0, 1.0 - r)
        if self.kind == "type2_bump":
            return np.where(r < 1.0, (1.0 - r * r) ** 2, 0.0)
        pts = np.asarray(self.points)
        return np.interp(r, pts[:, 0], pts[:, 1])

    def odd_polynomial(self):
        """Coefficients of phi(d) = psi(|d|) d as polynomials in d on each side.

        Returns ``(radius, right, left)`` with coefficients in increasing
        powers of d, valid for 0 <= d < radius and -radius < d < 0; ``None``
        when the kernel is not piecewise polynomial in that sense.
        """
        if self.kind == "type1_constant":
            return math.inf, (0.0, self.value), (0.0, self.value)
        if self.kind == "type2_tent":
            return 1.0, (0.0, 1.0, -1.0), (0.0, 1.0, 1.0)
        if self.kind == "type2_bump":
            c = (0.0, 1.0, 0.0, -2.0, 0.0, 1.0)
            return 1.0, c, c
        return None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "type1_constant":
            d["value"] = self.value
        elif self.kind == "type1_exponential":
            d["lambda"] = self.lam
        elif self.kind == "table":
            d["points"] = [list(p) for p in self.points]
            d["lipschitz"] = self.lipschitz_bound
        return d


def type1_constant(value: float = 1.0) -> InfluenceKernel:
    if not value > 0:
        raise ValueError("constant kernel value must be > 0")
    return InfluenceKernel("type1_constant", 0.0, value, math.inf, value, value=value)


def type1_exponential(lam: float = 1.0) -> InfluenceKernel:
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    return InfluenceKernel("type1_exponential", lam, 1.0, math.inf, 0.0, lam=lam)


def type2_tent() -> InfluenceKernel:
    return InfluenceKernel("type2_tent", 1.0, 1.0, 1.0, 0.0)


def type2_bump() -> InfluenceKernel:
    # max |d/dr (1 - r^2)^2| = 8 / (3 sqrt 3), attained at r = 1/sqrt(3)
    return InfluenceKernel("type2_bump", 8.0 / (3.0 * math.sqrt(3.0)), 1.0, 1.0, 0.0)


def table_kernel(points, lipschitz: float | None = None) -> InfluenceKernel:
    """Piecewise-linear kernel through ``[[r, psi], ...]``, constant past the last point.

    A table ending in 0 is compactly supported and must vanish beyond r = 1;
    otherwise it must stay positive.  The sampled slope may not exceed the
    declared Lipschitz bound.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("table kernel needs at least two [r, psi] points")
    if pts[0, 0] != 0.0 or np.any(np.diff(pts[:, 0]) <= 0):
        raise ValueError("table kernel radii must start at 0 and increase strictly")
    if np.any(pts[:, 1] < 0) or not np.all(np.isfinite(pts)):
        raise ValueError("table kernel values must be finite and >= 0")
    slopes = np.abs(np.diff(pts[:, 1]) / np.diff(pts[:, 0]))
    est = float(slopes.max())
    if lipschitz is None:
        lipschitz = est
    elif est > lipschitz + 1e-12:
        raise ValueError(f"table kernel slope {est:.6g} exceeds declared Lipschitz bound {lipschitz}")
    if pts[-1, 1] == 0.0:
        nz = np.nonzero(pts[:, 1] > 0)[0]
        support = float(pts[nz[-1] + 1, 0]) if len(nz) else 0.0
        if support > 1.0:
            raise ValueError("compactly supported table kernel must vanish for r > 1")
        floor = 0.0
    else:
        if np.any(pts[:, 1] <= 0):
            raise ValueError("a table kernel that does not end at 0 must be positive everywhere")
        support = math.inf
        floor = float(pts[:, 1].min())
    return InfluenceKernel("table", float(lipschitz), float(pts[:, 1].max()), support, floor,
                           points=tuple(map(tuple, pts.tolist())))


def make_kernel(spec: dict) -> InfluenceKernel:
    kind = spec["kind"]
    if kind == "type1_constant":
        return type1_constant(spec.get("value", 1.0))
    if kind == "type1_exponential":
        return type1_exponential(spec.get("lambda", 1.0))
    if kind == "type2_tent":
        return type2_tent()
    if kind == "type2_bump":
        return type2_bump()
    if kind == "table":
        return table_kernel(spec["points"], spec.get("lipschitz"))
    raise ValueError(f"unknown kernel kind {kind!r}")


def eval_kernel(kernel: InfluenceKernel, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise ValueError("kernel argument must be >= 0")
    out = kernel._raw(r_arr)
    return float(out) if out.ndim == 0 else out


def positive_floor(kernel: InfluenceKernel, r_max: float) -> float:
    """inf of psi over [0, r_max]; zero (with a warning) once r_max leaves a compact support."""
    if r_max < 0:
        raise ValueError("r_max must be >= 0")
    if kernel.compact and r_max >= kernel.support_radius:
        warnings.warn(f"{kernel.kind}: r_max={r_max} reaches the kernel support, floor is 0",
                      FloorVacuousWarning, stacklevel=2)
        return 0.0
    if kernel.kind == "table":
        pts = np.asarray(kernel.points)
        inside = pts[pts[:, 0] <= r_max, 1]
        return float(min(inside.min(), eval_kernel(kernel, r_max)))
    # remaining presets are nonincreasing
    return float(eval_kernel(kernel, r_max))
