"""Diameters and Hausdorff distances of confidence sets.

Implicit sets (known only through a membership oracle) are probed along
rays from an interior point; every reported size is built from member
points and so is a lower bound on the true quantity. Axis-aligned
rectangles have exact closed forms.

A membership oracle here is any callable taking a ``(k, p)`` array and
returning ``k`` booleans; :class:`~selfnorm.confset.CalibratedSet`
instances qualify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from . import streams
from .errors import CenterOutside, Unbounded
from .numlin import as_vector

MAX_CORNER_DIM = 10


@dataclass(frozen=True)
class Rect:
    center: np.ndarray
    half: np.ndarray

    def __post_init__(self):
        c = as_vector(self.center, "center")
        h = as_vector(self.half, "half")
        if c.shape != h.shape:
            raise ValueError("center and half-widths differ in length")
        if np.any(h < 0):
            raise ValueError("half-widths must be non-negative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half", h)

    def distance(self, points) -> np.ndarray:
        """Euclidean distance from each point to the rectangle (exact, by clamping)."""
        pts = np.atleast_2d(points)
        excess = np.clip(np.abs(pts - self.center) - self.half, 0.0, None)
        return np.sqrt(np.einsum("ij,ij->i", excess, excess))

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all(np.abs(pts - self.center) <= self.half, axis=1)

    __call__ = contains


@dataclass(frozen=True)
class GeometrySummary:
    diam2: float
    diam_inf: float
    directions_used: int
    per_direction_exit: list
    boundary: np.ndarray


def _as_oracle(member):
    def batch(points):
        return np.asarray(member(np.atleast_2d(points)), dtype=bool).reshape(-1)
    return batch


def first_exits(member, center, dirs, tol=1e-6, t_max=1e6, start=1e-3):
    """Largest member radius ``t`` along each unit direction, to within ``tol``.

    Bracket by doubling from ``start``, then bisect. The returned radii
    are radii of points verified to be members (the lower end of the
    final bracket), so ``center + t * v`` is in the set.
    """
    member = _as_oracle(member)
    dirs = np.atleast_2d(dirs)
    k = dirs.shape[0]
    lo = np.zeros(k)
    hi = np.full(k, np.inf)
    t = np.full(k, float(start))
    active = np.ones(k, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        inside = member(center + t[idx, None] * dirs[idx])
        lo[idx[inside]] = t[idx[inside]]
        hi[idx[~inside]] = t[idx[~inside]]
        t[idx[inside]] *= 2.0
        active = np.isinf(hi)
        over = active & (t > t_max)
        if over.any():
            raise Unbounded(dirs[np.flatnonzero(over)[0]].tolist(), t_max)
    half_tol = 0.5 * tol
    while True:
        idx = np.flatnonzero(hi - lo > half_tol)
        if idx.size == 0:
            return lo
        mid = 0.5 * (lo[idx] + hi[idx])
        inside = member(center + mid[:, None] * dirs[idx])
        lo[idx[inside]] = mid[inside]
        hi[idx[~inside]] = mid[~inside]


def _unit_rows(v):
    v = np.atleast_2d(v)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def diameter_estimate(member, center, directions: int = 50, tol: float = 1e-6, t_max: float = 1e6,
                      seed: int = 0, scale: float = 1.0, corner_probes: bool = True) -> GeometrySummary:
    """Direction-sampled lower bounds on ``diam_2`` and ``diam_inf``.

    Probes the ``2p`` signed axes, ``directions`` seeded random unit
    directions and their negatives, and (for ``p <= 10``) the ``2^p``
    directions pointing at the corners of the box spanned by the axis
    exits. ``diam2`` is the larger of the longest probed chord and the
    largest distance between any two boundary points found; ``diam_inf``
    is the largest sup-norm distance between the same points, which is
    never below the longest axis chord.
    """
    member = _as_oracle(member)
    center = as_vector(center, "center")
    p = center.shape[0]
    if not member(center[None, :])[0]:
        raise CenterOutside("the probing center is not a member of the set")
    start = 1e-3 * scale

    axes = np.eye(p)
    t_pos = first_exits(member, center, axes, tol, t_max, start)
    t_neg = first_exits(member, center, -axes, tol, t_max, start)
    lines = [(axes[j], t_pos[j], t_neg[j]) for j in range(p)]

    extra = []
    if directions > 0:
        g = streams.stream(seed, streams.DIRECTIONS).standard_normal((directions, p))
        extra.append(_unit_rows(g))
    if corner_probes and 1 < p <= MAX_CORNER_DIM:
        signs = np.array(np.meshgrid(*[[1.0, -1.0]] * p, indexing="ij")).reshape(p, -1).T
        signs = signs[signs[:, 0] > 0]  # one representative per +/- pair
        reach = np.where(signs > 0, t_pos, t_neg) * signs
        reach = reach[np.linalg.norm(reach, axis=1) > 0]
        if reach.size:
            extra.append(_unit_rows(reach))
    if extra:
        v = np.vstack(extra)
        tp = first_exits(member, center, v, tol, t_max, start)
        tn = first_exits(member, center, -v, tol, t_max, start)
        lines += [(v[i], tp[i], tn[i]) for i in range(v.shape[0])]

    dirs = np.array([d for d, _, _ in lines])
    tp = np.array([a for _, a, _ in lines])
    tn = np.array([b for _, _, b in lines])
    boundary = np.vstack([center + tp[:, None] * dirs, center - tn[:, None] * dirs])
    chord = float(np.max(tp + tn))
    spread = float(pdist(boundary).max()) if boundary.shape[0] > 1 else 0.0
    # both diameters come from the same point set, so diam2 <= sqrt(p) * diam_inf exactly
    spread_inf = float(pdist(boundary, "chebyshev").max()) if boundary.shape[0] > 1 else 0.0
    diam_inf = max(float(np.max(t_pos + t_neg)), spread_inf)
    exits = [(d.tolist(), float(a), float(b)) for d, a, b in lines]
    return GeometrySummary(max(chord, spread), diam_inf, len(lines), exits, boundary)


def directed_hausdorff_rect(a: Rect, b: Rect) -> tuple[float, float]:
    """Exact ``(d_2(A -> B), d_inf(A -> B))`` for axis-aligned rectangles.

    The distance to a box separates over coordinates, so the farthest
    point of A is the corner maximizing each coordinate's overshoot
    ``a_j + |c_A - c_B|_j - b_j`` independently.
    """
    if a.center.shape != b.center.shape:
        raise ValueError("rectangles live in different dimensions")
    over = np.clip(a.half + np.abs(a.center - b.center) - b.half, 0.0, None)
    return float(np.linalg.norm(over)), float(over.max(initial=0.0))


def hausdorff_rect_rect(a_half, b_half, center_offset=None) -> tuple[float, float]:
    """Symmetric ``(d_H2, d_Hinf)`` between rectangle A at the origin and B at ``center_offset``."""
    a_half = as_vector(a_half, "a_half")
    b_half = as_vector(b_half, "b_half")
    off = np.zeros_like(a_half) if center_offset is None else as_vector(center_offset, "center_offset")
    a = Rect(np.zeros_like(a_half), a_half)
    b = Rect(off, b_half)
    ab = directed_hausdorff_rect(a, b)
    ba = directed_hausdorff_rect(b, a)
    return max(ab[0], ba[0]), max(ab[1], ba[1])


def rect_boundary_points(rect: Rect, n_faces: int = 200, seed: int = 0) -> np.ndarray:
    """Corners (all of them up to p = 10, else a random subset), face centers and random face points."""
    p = rect.center.shape[0]
    rng = streams.stream(seed, streams.FACES)
    if p <= MAX_CORNER_DIM:
        signs = np.array(np.meshgrid(*[[1.0, -1.0]] * p, indexing="ij")).reshape(p, -1).T
    else:
        signs = rng.choice([-1.0, 1.0], size=(1024, p))
    pts = [rect.center + signs * rect.half]
    face_axis = np.repeat(np.arange(p), 2)
    face_sign = np.tile([1.0, -1.0], p)
    centers = np.tile(rect.center, (2 * p, 1))
    centers[np.arange(2 * p), face_axis] += face_sign * rect.half[face_axis]
    pts.append(centers)
    if n_faces > 0:
        u = rng.uniform(-1.0, 1.0, size=(n_faces, p))
        j = rng.integers(0, p, size=n_faces)
        u[np.arange(n_faces), j] = rng.choice([-1.0, 1.0], size=n_faces)
        pts.append(rect.center + u * rect.half)
    return np.vstack(pts)


@dataclass(frozen=True)
class HausdorffEstimate:
    d2: float
    set_to_rect: float
    rect_to_set: float
    diam2_set: float


def hausdorff_member_rect_detail(member, center, rect, directions: int = 50, tol: float = 1e-6,
                                 seed: int = 0, n_faces: int = 200, scale: float | None = None,
                                 t_max: float = 1e6) -> HausdorffEstimate:
    member = _as_oracle(member)
    center = as_vector(center, "center")
    if not isinstance(rect, Rect):
        rect = Rect(rect.wald_center, rect.wald_halfwidths)
    if scale is None:
        scale = float(max(rect.half.max(initial=0.0), 1e-12))
    geom = diameter_estimate(member, center, directions, tol, t_max, seed, scale)
    set_to_rect = float(rect.distance(geom.boundary).max())

    pts = rect_boundary_points(rect, n_faces, seed)
    outside = ~member(pts)
    rect_to_set = 0.0
    if outside.any():
        far = pts[outside]
        offs = far - center
        r = np.linalg.norm(offs, axis=1)
        dist = np.full(far.shape[0], np.inf)
        moving = r > 0
        if moving.any():
            # star-shaped approximation: the ray toward the center enters the set at its exit radius
            exits = first_exits(member, center, offs[moving] / r[moving, None], tol, t_max, 1e-3 * scale)
            dist[moving] = r[moving] - exits
        # nearest known boundary point is another (upper) bound on the distance to the set
        nearest = cdist(far, geom.boundary).min(axis=1)
        rect_to_set = float(np.minimum(dist, nearest).max())
    return HausdorffEstimate(max(set_to_rect, rect_to_set), set_to_rect, rect_to_set, geom.diam2)


def hausdorff_member_rect(member, center, rect, directions: int = 50, tol: float = 1e-6, seed: int = 0,
                          n_faces: int = 200) -> float:
    """Approximate Euclidean Hausdorff distance between an implicit set and a rectangle.

    ``rect`` is a :class:`Rect` or a Wald :class:`~selfnorm.confset.CalibratedSet`.
    Set-to-rectangle distances are exact from sampled boundary points of
    the set; rectangle-to-set distances use rays toward ``center``.
    """
    return hausdorff_member_rect_detail(member, center, rect, directions, tol, seed, n_faces).d2
