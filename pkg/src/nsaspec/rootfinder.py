"""Zeros of exponential sums in rectangles.

Winding numbers come from certified phase tracking along the boundary: a
segment [z, z + h] is accepted once h * max|F'| on it is smaller than
|F| at one of its ends, which pins the phase change to the principal
difference of the end arguments. Boxes are split until each holds at most
one zero, then Newton finishes the job.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np
from scipy.special import logsumexp

from .errors import BoundaryZero, NumericalFailure
from .expsum import ExpSum, es_eval_scaled
from .hull import HullReport

SCHEMA_VERSION = 1
SPLIT_RATIOS = (0.4823, 0.5371, 0.4433, 0.5617, 0.4129)
NEWTON_MAXIT = 50
NUDGE_RETRIES = 5
CLUSTER_RADIUS = 1e-3  # half-width (relative) of the box that confirms a multiple zero


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("NSASPEC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @classmethod
    def parse(cls, text: str) -> "Rect":
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError("rectangle needs x0,x1,y0,y1")
        return cls(*parts)

    @classmethod
    def square(cls, half: float, center: complex = 0) -> "Rect":
        return cls(center.real - half, center.real + half, center.imag - half, center.imag + half)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def diam(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> complex:
        return complex((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    def corners(self) -> list[complex]:
        """Anticlockwise from the lower-left corner."""
        return [complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1)]

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.x0 - pad <= z.real <= self.x1 + pad) and (self.y0 - pad <= z.imag <= self.y1 + pad)

    def grown(self, by: float) -> "Rect":
        return Rect(self.x0 - by, self.x1 + by, self.y0 - by, self.y1 + by)

    def split(self, ratio: float) -> list["Rect"]:
        xm = self.x0 + ratio * self.width
        ym = self.y0 + (1 - ratio) * self.height
        if self.width > 2 * self.height:
            return [Rect(self.x0, xm, self.y0, self.y1), Rect(xm, self.x1, self.y0, self.y1)]
        if self.height > 2 * self.width:
            return [Rect(self.x0, self.x1, self.y0, ym), Rect(self.x0, self.x1, ym, self.y1)]
        return [Rect(self.x0, xm, self.y0, ym), Rect(xm, self.x1, self.y0, ym),
                Rect(self.x0, xm, ym, self.y1), Rect(xm, self.x1, ym, self.y1)]

    def to_list(self) -> list[float]:
        return [self.x0, self.x1, self.y0, self.y1]


@dataclass(frozen=True)
class Zero:
    z: complex
    multiplicity: int
    residual: float


@dataclass(frozen=True)
class ZeroSet:
    zeros: tuple
    region: Rect
    total_winding: int

    def __len__(self):
        return len(self.zeros)

    @property
    def points(self) -> np.ndarray:
        return np.array([zz.z for zz in self.zeros], dtype=complex)

    @property
    def count(self) -> int:
        return sum(zz.multiplicity for zz in self.zeros)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "multiplicity", "residual"])
        for zz in self.zeros:
            w.writerow([repr(float(zz.z.real)), repr(float(zz.z.imag)), zz.multiplicity, repr(float(zz.residual))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "region": self.region.to_list(),
            "total_winding": self.total_winding,
            "zeros": [{"z": [zz.z.real, zz.z.imag], "multiplicity": zz.multiplicity, "residual": zz.residual}
                      for zz in self.zeros],
        }

    @classmethod
    def from_csv(cls, text: str, region: Rect | None = None) -> "ZeroSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        zeros = tuple(Zero(complex(float(r["re"]), float(r["im"])), int(r.get("multiplicity", 1) or 1),
                           float(r.get("residual", 0) or 0)) for r in rows)
        if region is None:
            pts = np.array([zz.z for zz in zeros]) if zeros else np.zeros(1, complex)
            region = Rect(pts.real.min() - 1, pts.real.max() + 1, pts.imag.min() - 1, pts.imag.max() + 1)
        return cls(zeros, region, sum(zz.multiplicity for zz in zeros))


# --- phase tracking -------------------------------------------------------

class _Tracker:
    """Per-function data for certified boundary phase tracking."""

    def __init__(self, f: ExpSum):
        if f.is_zero:
            raise ValueError("F vanishes identically")
        self.f = f
        self.mu = f.mu
        with np.errstate(divide="ignore"):
            self.log_dmu = np.log(np.abs(f.delta * f.mu))
        self.mu_max = float(np.abs(f.mu).max())

    def eval(self, z: np.ndarray):
        v, s = es_eval_scaled(self.f, z)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(v)) + s, np.angle(v)

    def edge_phase(self, a: complex, b: complex, floor: float) -> float:
        """Certified change of arg F along the segment a -> b."""
        L = abs(b - a)
        n0 = int(min(4096, max(8, math.ceil(2 * L * self.mu_max))))
        t = np.linspace(0.0, 1.0, n0 + 1)
        z = a + t * (b - a)
        lf, ph = self.eval(z)
        while True:
            h = np.diff(t) * L
            # log max|F'| on each segment; Re(mu z) is linear so the max is at an end
            re = (self.mu[:, None] * z[None, :]).real
            seg_max = np.maximum(re[:, :-1], re[:, 1:])
            log_dmax = logsumexp(self.log_dmu[:, None] + seg_max, axis=0)
            with np.errstate(divide="ignore"):
                ok = np.log(h) + log_dmax < np.maximum(lf[:-1], lf[1:])
            if ok.all():
                break
            bad = np.flatnonzero(~ok)
            if (h[bad] < floor).any():
                raise BoundaryZero(f"zero of F on or near the segment {a} -> {b}")
            tm = (t[bad] + t[bad + 1]) / 2
            zm = a + tm * (b - a)
            lm, pm = self.eval(zm)
            t = np.concatenate([t, tm])
            order = np.argsort(t, kind="stable")
            t = t[order]
            z = np.concatenate([z, zm])[order]
            lf = np.concatenate([lf, lm])[order]
            ph = np.concatenate([ph, pm])[order]
        d = np.diff(ph)
        d = (d + np.pi) % (2 * np.pi) - np.pi
        return float(d.sum())

    def winding(self, rect: Rect) -> int:
        c = rect.corners()
        floor = 1e-13 * max(rect.diam, 1.0)
        total = sum(self.edge_phase(c[k], c[(k + 1) % 4], floor) for k in range(4))
        w = total / (2 * np.pi)
        n = int(round(w))
        if abs(w - n) > 1e-6:  # pragma: no cover - certification makes this exact
            raise NumericalFailure(f"non-integral winding {w}")
        return n


def _nudged(tracker: _Tracker, rect: Rect) -> tuple[int, Rect]:
    r = rect
    for k in range(NUDGE_RETRIES + 1):
        try:
            return tracker.winding(r), r
        except BoundaryZero:
            if k == NUDGE_RETRIES:
                raise
            r = rect.grown((k + 1) * 1e-6 * rect.diam)
    raise AssertionError("unreachable")


def winding_number(f: ExpSum, rect: Rect) -> int:
    """Number of zeros of f (with multiplicity) inside rect.

    A zero on the boundary triggers up to five outward nudges of 1e-6 diam
    before BoundaryZero is raised.
    """
    return _nudged(_Tracker(f), rect)[0]


# --- Newton -----------------------------------------------------------------

def relative_residual(f: ExpSum, z) -> np.ndarray:
    """|F(z)| / max_r |delta_r e^{mu_r z}|."""
    v, _ = es_eval_scaled(f, np.asarray(z, dtype=complex))
    return np.abs(v)


def newton(f: ExpSum, df: ExpSum, z0: complex, maxit: int = NEWTON_MAXIT,
           multiplicity: int = 1) -> tuple[complex, bool]:
    """Newton's method in scaled form; ``multiplicity`` > 1 uses the step m F/F'.

    For multiple zeros rounding limits the attainable accuracy to about
    eps^(1/m), so stagnation of the step at that level also counts as converged.
    """
    z = complex(z0)
    m = max(1, int(multiplicity))
    floor = 1e-6 if m > 1 else 0.0
    prev = math.inf
    for k in range(maxit):
        v, s = es_eval_scaled(f, z)
        dv, ds = es_eval_scaled(df, z)
        if dv == 0:
            return z, v == 0
        with np.errstate(over="ignore", invalid="ignore"):
            step = complex(m * v / dv * np.exp(s - ds))
        if not np.isfinite(step):
            return z, False
        z = z - step
        size = abs(step)
        if size <= 1e-12 * (1 + abs(z)):
            if m == 1:
                v, s = es_eval_scaled(f, z)
                dv, ds = es_eval_scaled(df, z)
                if dv != 0:
                    z = z - complex(v / dv * np.exp(s - ds))  # polish
            return z, True
        if k > 5 and size >= 0.5 * prev and size <= floor * (1 + abs(z)):
            return z, True
        prev = size
    return z, False


# --- quadtree ---------------------------------------------------------------

def _subdivide(tracker: _Tracker, rect: Rect, w: int) -> list[tuple[Rect, int]]:
    last = None
    for ratio in SPLIT_RATIOS:
        try:
            kids = rect.split(ratio)
            ws = [tracker.winding(k) for k in kids]
        except BoundaryZero as exc:
            last = exc
            continue
        if sum(ws) == w:
            return [(k, wk) for k, wk in zip(kids, ws) if wk > 0]
        last = NumericalFailure(f"child windings {ws} do not add up to {w}")
    raise last if last is not None else NumericalFailure("subdivision failed")


def _cluster(tracker: _Tracker, df: ExpSum, rect: Rect, w: int):
    """A w-fold zero (or tight cluster) in rect, confirmed by a small winding box; else None."""
    z, ok = newton(tracker.f, df, rect.center, multiplicity=w)
    if not ok or not rect.contains(z):
        return None
    r = CLUSTER_RADIUS * (1 + abs(z))
    if not rect.contains(z - complex(r, r)) or not rect.contains(z + complex(r, r)):
        return None
    try:
        if tracker.winding(Rect.square(r, z)) != w:
            return None
    except BoundaryZero:
        return None
    return Zero(z, w, float(relative_residual(tracker.f, z)))


def _process(tracker: _Tracker, df: ExpSum, rect: Rect, w: int, resolution: float):
    """Returns (found zeros, boxes still to split)."""
    if w == 0:
        return [], []
    if w == 1 or rect.diam <= resolution:
        z, ok = newton(tracker.f, df, rect.center)
        pad = 1e-12 * (1 + abs(z))
        if ok and rect.contains(z, pad):
            return [Zero(z, w, float(relative_residual(tracker.f, z)))], []
        if rect.diam <= resolution:
            c = rect.center
            return [Zero(c, w, float(relative_residual(tracker.f, c)))], []
    else:
        found = _cluster(tracker, df, rect, w)
        if found is not None:
            return [found], []
    return [], _subdivide(tracker, rect, w)


def _dedupe(zeros: list[Zero]) -> list[Zero]:
    zeros = sorted(zeros, key=lambda q: (q.z.real, q.z.imag))
    out: list[Zero] = []
    for q in zeros:
        for j, p in enumerate(out):
            if abs(p.z - q.z) <= 1e-8 * (1 + abs(q.z)):
                out[j] = Zero(p.z, p.multiplicity + q.multiplicity, min(p.residual, q.residual))
                break
        else:
            out.append(q)
    return sorted(out, key=lambda q: (round(q.z.real, 12), round(q.z.imag, 12)))


def find_zeros(f: ExpSum, rect: Rect, resolution: float = 1e-9, threads: int | None = None) -> ZeroSet:
    """All zeros of f in rect by quadtree subdivision and Newton refinement."""
    tracker = _Tracker(f)
    df = f.derivative()
    total, rect = _nudged(tracker, rect)
    resolution = max(float(resolution), 1e-12 * rect.diam)
    threads = default_threads() if threads is None else max(1, int(threads))
    found: list[Zero] = []
    level = [(rect, total)] if total > 0 else []
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while level:
            if pool is not None:
                results = list(pool.map(lambda item: _process(tracker, df, item[0], item[1], resolution), level))
            else:
                results = [_process(tracker, df, r, w, resolution) for r, w in level]
            level = []
            for zs, kids in results:
                found.extend(zs)
                level.extend(kids)
    finally:
        if pool is not None:
            pool.shutdown()
    return ZeroSet(tuple(_dedupe(found)), rect, total)


def _disk_cover(E: float) -> Rect:
    # off-lattice padding so the square's sides avoid structured zero sets
    pad = 0.5371 + 1e-3 * E
    return Rect.square(E + pad)


def zeros_in_disk(f: ExpSum, E: float, threads: int | None = None) -> ZeroSet:
    zs = find_zeros(f, _disk_cover(E), threads=threads)
    tol = 1e-9 * (1 + E)
    keep = tuple(q for q in zs.zeros if abs(q.z) <= E + tol)
    return ZeroSet(keep, zs.region, zs.total_winding)


def count_function(f: ExpSum, E_values: Sequence[float], zeros: ZeroSet | None = None,
                   threads: int | None = None) -> list[tuple[float, int]]:
    """N(E) = number of zeros with |z| <= E, counted with multiplicity."""
    E_values = [float(E) for E in E_values]
    if not E_values:
        return []
    if zeros is None:
        zeros = find_zeros(f, _disk_cover(max(E_values)), threads=threads)
    mods = np.array([abs(q.z) for q in zeros.zeros])
    mult = np.array([q.multiplicity for q in zeros.zeros])
    out = []
    for E in E_values:
        tol = 1e-9 * (1 + E)
        out.append((E, int(mult[mods <= E + tol].sum()) if mods.size else 0))
    return out


# --- localization against hull predictions ----------------------------------

@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    count: int
    max_line_deviation: float
    max_lattice_deviation: float


@dataclass(frozen=True)
class LocalizationSummary:
    T: float
    eps: float
    n_zeros: int
    max_line_deviation: float
    max_lattice_deviation: float
    all_within_eps: bool
    bands: tuple
    dps: int
    zeros: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "T": self.T, "eps": self.eps, "n_zeros": self.n_zeros,
            "max_line_deviation": self.max_line_deviation,
            "max_lattice_deviation": self.max_lattice_deviation,
            "all_within_eps": self.all_within_eps,
            "dps": self.dps,
            "bands": [b.__dict__ for b in self.bands],
        }


def _mp_polish(terms, z0: complex, tol) -> "mpmath.mpc":
    z = mpmath.mpc(z0)
    for _ in range(60):
        F = mpmath.fsum(d * mpmath.exp(m * z) for m, d in terms)
        D = mpmath.fsum(d * m * mpmath.exp(m * z) for m, d in terms)
        step = F / D
        z -= step
        if abs(step) <= tol * (1 + abs(z)):
            break
    return z


def localization_report(f: ExpSum, report: HullReport, T: float, eps: float, R_max: float | None = None,
                        bands: Sequence[float] | None = None, zeros: ZeroSet | None = None,
                        dps: int | None = None) -> LocalizationSummary:
    """Distances of the zeros with T < |z| <= R_max to the asymptotic lines and lattice points.

    Zeros are re-polished in multiprecision so that lattice deviations far
    below double-precision resolution are measured, not rounding noise.
    ``bands`` are band edges in |z| (default width T/2 from T to R_max).
    """
    T = float(T)
    R_max = 2.5 * T if R_max is None else float(R_max)
    if bands is None:
        bands = list(np.arange(T, R_max + 1e-9, T / 2))
    bands = [float(b) for b in bands]
    if zeros is None:
        zeros = find_zeros(f, _disk_cover(R_max))
    mu_max = float(np.abs(f.mu).max())
    if dps is None:
        dps = int(min(400, 30 + math.ceil(2 * R_max * mu_max / math.log(10))))
    selected = [q.z for q in zeros.zeros if T < abs(q.z) <= R_max]
    line_dev = []
    lat_dev = []
    polished = []
    with mpmath.workdps(dps):
        terms = [(mpmath.mpc(m), mpmath.mpc(d)) for m, d in zip(f.mu, f.delta)]
        tol = mpmath.mpf(10) ** (-(dps - 10))
        edges = []
        for e in report.edges:
            gm = mpmath.conj(terms[e.r_minus][0])
            g = mpmath.conj(terms[e.r][0])
            d = g - gm
            c = mpmath.log(terms[e.r_minus][1] / terms[e.r][1])
            k = mpmath.re(c)
            edges.append((d, abs(d), c, k))
        for z0 in selected:
            z = _mp_polish(terms, z0, tol)
            polished.append(complex(z))
            best_line = mpmath.inf
            best_lat = mpmath.inf
            for d, rho, c, k in edges:
                best_line = min(best_line, abs(mpmath.re(z * mpmath.conj(d)) - k) / rho)
                w = (z * rho ** 2 / d - c) / (mpmath.pi * 1j)
                n = mpmath.nint((mpmath.re(w) - 1) / 2)
                zl = (c + (2 * n + 1) * mpmath.pi * 1j) * d / rho ** 2
                best_lat = min(best_lat, abs(z - zl))
            line_dev.append(float(best_line))
            lat_dev.append(float(best_lat))
    mods = np.abs(np.array(selected, dtype=complex))
    line_dev = np.array(line_dev)
    lat_dev = np.array(lat_dev)
    table = []
    for lo, hi in zip(bands[:-1], bands[1:]):
        m = (mods >= lo) & (mods < hi) if hi < bands[-1] else (mods >= lo) & (mods <= hi)
        table.append(Band(lo, hi, int(m.sum()),
                          float(line_dev[m].max()) if m.any() else float("nan"),
                          float(lat_dev[m].max()) if m.any() else float("nan")))
    mx_line = float(line_dev.max()) if line_dev.size else 0.0
    mx_lat = float(lat_dev.max()) if lat_dev.size else 0.0
    return LocalizationSummary(T, float(eps), len(selected), mx_line, mx_lat, bool(mx_line <= eps),
                               tuple(table), dps, tuple(polished))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
