"""Moments, variances, dissipation and cluster detection for weighted point sets.

Every function accepts either a micro ensemble (group positions with integer
multiplicities) or a kinetic measure; both expose ``positions`` and
``weights`` summing to one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from . import interaction
from .kernels import InfluenceKernel


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    N: float
    M: float
    m0: float
    m1: np.ndarray
    m2: float
    V: float
    V_X: float
    D: float
    M1dist: float
    c1_residual: float

    def row(self) -> list[float]:
        return [self.t, self.N, self.M, self.m0, *self.m1.tolist(), self.m2, self.V, self.V_X,
                self.D, self.M1dist, self.c1_residual]

    @staticmethod
    def header(dim: int) -> list[str]:
        return ["t", "N", "M", "m0", *[f"m1_{i + 1}" for i in range(dim)], "m2", "V", "V_X", "D",
                "M1dist", "c1_residual"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["m1"] = self.m1.tolist()
        return d


def _pw(obj):
    return np.asarray(obj.positions, dtype=float), np.asarray(obj.weights, dtype=float)


def moments(obj):
    """(m0, m1, m2) with m0 the total weight."""
    x, w = _pw(obj)
    return float(w.sum()), w @ x, float(w @ np.einsum("ij,ij->i", x, x))


def variance(obj) -> float:
    x, w = _pw(obj)
    m1 = w @ x
    y = x - m1
    return float(w @ np.einsum("ij,ij->i", y, y))


def variance_about_inflow(obj, X) -> float:
    x, w = _pw(obj)
    y = x - np.asarray(X, dtype=float)
    return float(w @ np.einsum("ij,ij->i", y, y))


def dissipation(obj, kernel: InfluenceKernel, velocities=None) -> float:
    """sum_ij w_i w_j psi(|x_i - x_j|) |x_i - x_j|^2.

    Uses the symmetrization identity D = -2 sum_i w_i (x_i - c) . v_i with
    v the interaction velocity, so it costs one interaction evaluation.
    """
    x, w = _pw(obj)
    if velocities is None:
        velocities = interaction.velocities(x, w, kernel)
    c = w @ x / w.sum()
    D = -2.0 * float(w @ np.einsum("ij,ij->i", x - c, velocities))
    return max(D, 0.0)


def dissipation_direct(obj, kernel: InfluenceKernel) -> float:
    x, w = _pw(obj)
    diff = x[:, None, :] - x[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    return float(w @ (kernel._raw(np.sqrt(r2)) * r2) @ w)


@dataclass
class ClusterReport:
    J: int
    labels: np.ndarray
    centers: np.ndarray
    masses: np.ndarray
    min_inter: float
    max_intra: float
    counts: np.ndarray | None = field(default=None, repr=False)

    def members(self, k: int) -> np.ndarray:
        """Agent indices in cluster ``k`` (groups expanded in storage order)."""
        if self.counts is None:
            return np.nonzero(self.labels == k)[0]
        offsets = np.concatenate(([0], np.cumsum(self.counts)))
        groups = np.nonzero(self.labels == k)[0]
        return np.concatenate([np.arange(offsets[g], offsets[g + 1]) for g in groups])

    def to_dict(self) -> dict:
        return {
            "J": int(self.J),
            "masses": self.masses.tolist(),
            "centers": self.centers.tolist(),
            "min_inter": None if math.isinf(self.min_inter) else float(self.min_inter),
            "max_intra": float(self.max_intra),
        }


def _diameter(x: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    if x.shape[1] == 1:
        return float(x.max() - x.min())
    x = np.unique(x, axis=0)
    if len(x) > 3000:
        from scipy.spatial import ConvexHull, QhullError

        try:
            x = x[ConvexHull(x).vertices]
        except QhullError:
            pass
    return float(pdist(x).max()) if len(x) > 1 else 0.0


def _link_labels(x: np.ndarray, radius: float) -> np.ndarray:
    if x.shape[1] == 1:
        order = np.argsort(x[:, 0], kind="stable")
        gaps = np.diff(x[order, 0]) > radius
        lab = np.empty(len(x), dtype=np.int64)
        lab[order] = np.concatenate(([0], np.cumsum(gaps)))
        return lab
    pairs = cKDTree(x).query_pairs(radius, output_type="ndarray")
    from scipy.sparse import coo_matrix

    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(x), len(x)))
    return connected_components(g, directed=False)[1]


def detect_clusters(obj, link_radius: float = 0.5, total_mass: float | None = None) -> ClusterReport:
    """Single-linkage clusters of the position graph with edges |x_i - x_j| <= link_radius.

    Masses are in s-mass units (agents / rho) for ensembles, and weights times
    ``total_mass`` (default 1) for measures.
    """
    if not link_radius > 0:
        raise ValueError("link_radius must be > 0")
    x, w = _pw(obj)
    if total_mass is None:
        total_mass = float(getattr(obj, "mass", 1.0))
    lab = _link_labels(x, link_radius)
    J = int(lab.max()) + 1
    masses = np.bincount(lab, weights=w, minlength=J)
    centers = np.stack([np.bincount(lab, weights=w * x[:, i], minlength=J) for i in range(x.shape[1])], axis=1)
    centers /= masses[:, None]
    # order clusters by their first coordinate for stable output
    order = np.lexsort(centers.T[::-1])
    remap = np.empty(J, dtype=np.int64)
    remap[order] = np.arange(J)
    lab, masses, centers = remap[lab], masses[order], centers[order]
    min_inter = float(pdist(centers).min()) if J > 1 else math.inf
    max_intra = max(_diameter(x[lab == k]) for k in range(J))
    counts = getattr(obj, "counts", None)
    return ClusterReport(J, lab, centers, masses * total_mass, min_inter, max_intra, counts)


def pair_dichotomy_fraction(obj, intra: float = 0.05, inter: float = 0.95) -> float:
    """Fraction of agent pairs whose distance lies strictly between the two bands.

    With weights w the pair mass is sum_{i != j} w_i w_j, so coincident
    agents in a group count as intra pairs.
    """
    x, w = _pw(obj)
    total = _pair_total(obj) if hasattr(obj, "counts") else 0.5 * (1.0 - float(w @ w))
    if total <= 0:
        return 0.0
    if x.shape[1] == 1:
        order = np.argsort(x[:, 0], kind="stable")
        a, ws = x[order, 0], w[order]
        P = np.concatenate(([0.0], np.cumsum(ws)))
        lo = np.searchsorted(a, a + intra, side="right")
        hi = np.searchsorted(a, a + inter, side="left")
        bad = float(ws @ (P[np.maximum(hi, lo)] - P[lo]))
    else:
        bad = 0.0
        step = max(1, 2_000_000 // len(x))
        for s in range(0, len(x), step):
            r = np.sqrt(((x[s:s + step, None, :] - x[None, :, :]) ** 2).sum(-1))
            mask = (r > intra) & (r < inter)
            bad += float(w[s:s + step] @ (mask @ w)) / 2.0
    return bad / total


def _pair_total(ens) -> float:
    # unordered distinct agent pairs, each carrying weight 1 / M^2
    M = float(ens.M)
    return 0.5 * (1.0 - 1.0 / M) if M > 1 else 0.0


def fit_decay_exponent(t, V, window) -> float:
    """Negated least-squares slope of log V against log t over ``window``."""
    t = np.asarray(t, dtype=float)
    V = np.asarray(V, dtype=float)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.any(V[mask] <= 0):
        bad = mask & (V <= 0)
        first_bad = t[bad].min()
        warnings.warn(f"non-positive V in window; shrinking window to end before t={first_bad}",
                      RuntimeWarning, stacklevel=2)
        mask &= t < first_bad
    if mask.sum() < 2 or np.any(t[mask] <= 0):
        raise ValueError("decay fit needs at least two points with t > 0 and V > 0")
    slope = np.polyfit(np.log(t[mask]), np.log(V[mask]), 1)[0]
    return float(-slope)


def variance_identity_check(rec0: DiagnosticsRecord, rec1: DiagnosticsRecord, b0: float, b1: float,
                            about_inflow: bool = False) -> float:
    """|dV/dt - (-b V + b M1dist - D)| with the right side averaged over both records.

    With ``about_inflow`` the constant-inflow form dV_X/dt = -b V_X - D is used.
    """
    dt = rec1.t - rec0.t
    if not dt > 0:
        raise ValueError("records must be in increasing time order")
    if about_inflow:
        lhs = (rec1.V_X - rec0.V_X) / dt
        f0 = -b0 * rec0.V_X - rec0.D
        f1 = -b1 * rec1.V_X - rec1.D
    else:
        lhs = (rec1.V - rec0.V) / dt
        f0 = -b0 * rec0.V + b0 * rec0.M1dist - rec0.D
        f1 = -b1 * rec1.V + b1 * rec1.M1dist - rec1.D
    return abs(lhs - 0.5 * (f0 + f1))
