"""Recover the edges of the exponent polygon from a computed zero set.

Large zeros line up in series, one per edge of K: the series runs in the
direction of the edge's outward normal, with spacing 2 pi / (edge length).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientData, NonGenericPattern

GAP_DEG = 5.0
SPACING_TOL = 0.10
MIN_CLUSTER = 4


@dataclass(frozen=True)
class Reconstruction:
    edges: np.ndarray  # edge vectors, sorted by outward-normal angle
    normals: np.ndarray
    spacings: np.ndarray
    cluster_sizes: tuple
    closure_defect: float

    @property
    def lengths(self) -> np.ndarray:
        return np.abs(self.edges)

    @property
    def vertices(self) -> np.ndarray:
        """Polygon vertices, starting at 0."""
        return np.concatenate([[0j], np.cumsum(self.edges)[:-1]])

    def __iter__(self):
        return iter(self.edges)

    def __len__(self):
        return len(self.edges)

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "edges": [[e.real, e.imag] for e in self.edges],
            "lengths": self.lengths.tolist(),
            "normals": [[u.real, u.imag] for u in self.normals],
            "spacings": self.spacings.tolist(),
            "cluster_sizes": list(self.cluster_sizes),
            "closure_defect": self.closure_defect,
        }


def _angular_clusters(z: np.ndarray, gap_deg: float) -> list[np.ndarray]:
    ang = np.angle(z)
    order = np.argsort(ang)
    a = ang[order]
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
    cut = np.flatnonzero(gaps > math.radians(gap_deg))
    if cut.size == 0:
        return [order]
    # rotate so that clusters do not straddle the +-pi seam
    start = (cut[0] + 1) % a.size
    order = np.roll(order, -start)
    cut = (cut - start) % a.size
    bounds = np.sort(cut) + 1
    return [c for c in np.split(order, bounds) if c.size]


def reconstruct_polygon(zeros, r_min: float, gap_deg: float = GAP_DEG,
                        spacing_tol: float = SPACING_TOL) -> Reconstruction:
    """Edge vectors of K (up to translation) from zeros with |z| > r_min.

    ``zeros`` is a ZeroSet or an array of complex points.
    """
    pts = np.asarray(getattr(zeros, "points", zeros), dtype=complex).reshape(-1)
    pts = pts[np.abs(pts) > r_min]
    if pts.size == 0:
        raise InsufficientData(f"no zeros beyond r_min = {r_min}")
    edges, normals, spacings, sizes = [], [], [], []
    for idx in _angular_clusters(pts, gap_deg):
        c = pts[idx]
        if c.size < MIN_CLUSTER:
            raise InsufficientData(f"cluster near angle {np.degrees(np.angle(c.mean())):.1f} deg "
                                   f"has {c.size} zeros; need {MIN_CLUSTER}")
        center = c.mean()
        X = np.column_stack([(c - center).real, (c - center).imag])
        _, _, vt = np.linalg.svd(X, full_matrices=False)
        u = complex(vt[0, 0], vt[0, 1])
        if (center * u.conjugate()).real < 0:
            u = -u
        s = np.sort(((c - center) * u.conjugate()).real)
        gaps = np.diff(s)
        spacing = float(np.median(gaps))
        if spacing <= 0 or np.std(gaps) > spacing_tol * spacing:
            raise NonGenericPattern(f"irregular spacing in cluster near angle "
                                    f"{np.degrees(np.angle(u)):.1f} deg: std/median = "
                                    f"{np.std(gaps) / max(spacing, 1e-300):.3f}")
        rho = 2 * math.pi / spacing
        edges.append(rho * 1j * u)
        normals.append(u)
        spacings.append(spacing)
        sizes.append(int(c.size))
    order = np.argsort(np.angle(np.array(normals)))
    edges = np.array(edges)[order]
    normals = np.array(normals)[order]
    closure = float(abs(edges.sum()) / np.abs(edges).sum())
    return Reconstruction(edges, normals, np.array(spacings)[order], tuple(np.array(sizes)[order].tolist()),
                          closure)
