"""Segmentation mask to lane fits to a 31-point guidance line.

Masks are top-view label rasters (0 background, 1..4 = left-left, left,
right, right-right). Lanes are near-vertical in the top view, so fits use
the image row as the regressor: ``col = c0 + c1*row + ...``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import cv2
import numpy as np
from scipy.linalg import solve_triangular

LEFT_LEFT, LEFT, RIGHT, RIGHT_RIGHT = 1, 2, 3, 4
N_GUIDANCE = 31
FRAME = 300


class LaneError(ValueError):
    pass


@dataclass(frozen=True)
class SegMask:
    labels: np.ndarray  # (height, width) uint8

    def __post_init__(self) -> None:
        lab = np.asarray(self.labels)
        if lab.ndim != 2 or lab.shape[0] == 0 or lab.shape[1] == 0:
            raise LaneError(f"mask must be a non-empty 2-D grid, got shape {lab.shape}")
        if lab.size and lab.max() > 4:
            raise LaneError("labels must be in 0..4")
        object.__setattr__(self, "labels", lab.astype(np.uint8, copy=False))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class Homography:
    h: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float).reshape(3, 3)
        if abs(np.linalg.det(h)) <= 1e-12:
            raise LaneError("homography is singular")
        object.__setattr__(self, "h", h)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def from_points(cls, src, dst) -> "Homography":
        """Exact homography from four point correspondences (DLT)."""
        src = np.asarray(src, dtype=float)
        dst = np.asarray(dst, dtype=float)
        if src.shape != (4, 2) or dst.shape != (4, 2):
            raise LaneError("need exactly four correspondences")
        a = np.zeros((8, 8))
        b = np.zeros(8)
        for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
            a[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
            a[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
            b[2 * i], b[2 * i + 1] = u, v
        sol = np.linalg.solve(a, b)
        return cls(np.append(sol, 1.0).reshape(3, 3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.h))

    def apply(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        hom = np.column_stack([pts, np.ones(len(pts))]) @ self.h.T
        return hom[:, :2] / hom[:, 2:3]


@dataclass(frozen=True)
class PolyFit:
    degree: int
    coefficients: tuple[float, ...]  # constant term first
    metric: float

    def __post_init__(self) -> None:
        if len(self.coefficients) != self.degree + 1:
            raise LaneError("coefficient count must equal degree + 1")

    def __call__(self, u):
        return np.polynomial.polynomial.polyval(u, self.coefficients)


class GuidanceSource(str, Enum):
    BOTH = "both-lanes"
    LEFT_OFFSET = "left+offset"
    RIGHT_OFFSET = "right+offset"
    NONE = "none"


@dataclass(frozen=True)
class GuidanceLine:
    points: tuple[tuple[float, float], ...] = ()
    source: GuidanceSource = GuidanceSource.NONE

    @property
    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    def __bool__(self) -> bool:
        return self.source is not GuidanceSource.NONE and len(self.points) > 0


def apply_ipm(mask: SegMask, h: Homography, out_size: tuple[int, int] = (FRAME, FRAME)) -> SegMask:
    """Warp ``mask`` with ``h`` (input pixel -> output pixel), nearest label sampling.

    ``out_size`` is (width, height). Output pixels whose pre-image falls
    outside the input are background.
    """
    width, height = out_size
    out = cv2.warpPerspective(mask.labels, h.h, (width, height), flags=cv2.INTER_NEAREST,
                              borderMode=cv2.BORDER_CONSTANT, borderValue=0)
    return SegMask(out)


def erode(mask: SegMask, kernel: int = 3) -> SegMask:
    """Per-label erosion: a pixel keeps its label iff its whole k x k window shares it.

    Pixels outside the grid count as background.
    """
    if kernel < 3 or kernel % 2 == 0:
        raise LaneError(f"kernel must be odd and >= 3, got {kernel}")
    k = np.ones((kernel, kernel), np.uint8)
    lab = mask.labels
    lo = cv2.erode(lab, k, borderType=cv2.BORDER_CONSTANT, borderValue=0)
    hi = cv2.dilate(lab, k, borderType=cv2.BORDER_CONSTANT, borderValue=0)
    return SegMask(np.where((lo == hi) & (lab > 0), lab, 0).astype(np.uint8))


def extract_lane_pixels(mask: SegMask) -> list[list[tuple[int, int]]]:
    """Four coordinate lists (x=col, y=row) for labels 1..4 in row-major order."""
    rows, cols = np.nonzero(mask.labels)
    vals = mask.labels[rows, cols]
    return [list(zip(cols[vals == i].tolist(), rows[vals == i].tolist())) for i in range(1, 5)]


def _lane_arrays(mask: SegMask) -> list[tuple[np.ndarray, np.ndarray]]:
    rows, cols = np.nonzero(mask.labels)
    vals = mask.labels[rows, cols]
    return [(cols[vals == i].astype(float), rows[vals == i].astype(float)) for i in range(1, 5)]


def polyfit_least_squares(u, v, degree: int) -> PolyFit:
    """Least-squares fit of ``v = sum_i c_i * u**i`` for i = 0..degree.

    The regressor is centred and scaled to [-1, 1] before solving, then the
    coefficients are mapped back to the raw variable.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if degree not in (1, 2, 3):
        raise LaneError(f"degree must be 1, 2 or 3, got {degree}")
    if u.shape != v.shape or u.ndim != 1:
        raise LaneError("u and v must be 1-D arrays of equal length")
    if len(u) < degree + 1:
        raise LaneError(f"under-determined: {len(u)} points for degree {degree}")
    lo, hi = u.min(), u.max()
    if hi == lo:
        raise LaneError("regressor values are all identical")
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    t = (u - mid) / half
    vander = np.vander(t, degree + 1, increasing=True)
    q, r = np.linalg.qr(vander)
    diag = np.abs(np.diag(r))
    if diag.min() <= diag.max() * len(u) * np.finfo(float).eps:
        raise LaneError(f"rank-deficient system for degree {degree}")

    def solve(b):
        return solve_triangular(r, q.T @ b)

    sol = solve(v)
    # v = sum_j a_j ((u - mid)/half)^j; row j of `basis` holds the powers of u
    basis = np.zeros((degree + 1, degree + 1))
    term = np.ones(1)
    for j in range(degree + 1):
        basis[j, : len(term)] = term
        term = np.convolve(term, [-mid / half, 1.0 / half])
    coeffs = sol @ basis
    # refinement recovers the accuracy lost in the basis change; the residual
    # is evaluated in extended precision where the platform has it
    ul, vl = u.astype(np.longdouble), v.astype(np.longdouble)
    for _ in range(2):
        fitted = np.zeros_like(ul)
        for c in coeffs[::-1].astype(np.longdouble):
            fitted = fitted * ul + c
        coeffs = coeffs + solve((vl - fitted).astype(float)) @ basis
    resid = v - vander @ sol
    return PolyFit(degree, tuple(float(c) for c in coeffs), float(np.mean(resid * resid)))


TIE_TOL = 1e-12


def select_best_fit(u, v, parallel: bool = False) -> PolyFit:
    """Fit degrees 1-3 and keep the smallest mean squared residual.

    Ties within ``TIE_TOL`` go to the lowest degree.
    """
    if len(u) < 4:
        raise LaneError("need at least 4 points")

    def attempt(d):
        try:
            return polyfit_least_squares(u, v, d)
        except LaneError:
            return None

    if parallel:
        with ThreadPoolExecutor(max_workers=3) as pool:
            fits = list(pool.map(attempt, (1, 2, 3)))
    else:
        fits = [attempt(d) for d in (1, 2, 3)]
    fits = [f for f in fits if f is not None]
    if not fits:
        raise LaneError("no polynomial degree could be fitted")
    best = fits[0]
    for f in fits[1:]:
        if f.metric < best.metric - TIE_TOL:
            best = f
    return best


def fit_lanes(mask: SegMask, min_points: int = 4) -> list[PolyFit | None]:
    """Best fit per lane label (``col`` as a function of ``row``), None when absent."""
    fits: list[PolyFit | None] = []
    for cols, rows in _lane_arrays(mask):
        if len(cols) < min_points:
            fits.append(None)
            continue
        try:
            fits.append(select_best_fit(rows, cols))
        except LaneError:
            fits.append(None)
    return fits


def guidance_rows(height: int = FRAME) -> np.ndarray:
    """31 stations from the bottom edge (row ``height``) to the top row 0."""
    return np.linspace(float(height), 0.0, N_GUIDANCE)


def guidance_line(fits, lane_width_px: float, height: int = FRAME, width: int = FRAME) -> GuidanceLine:
    """Centre line from the left (label 2) and right (label 3) fits.

    ``fits`` is indexed by label - 1. A missing side is replaced by the
    other side shifted by half the lane width.
    """
    if lane_width_px <= 0:
        raise LaneError("lane width must be positive")
    left, right = fits[LEFT - 1], fits[RIGHT - 1]
    rows = guidance_rows(height)
    if left is not None and right is not None:
        xs, source = 0.5 * (left(rows) + right(rows)), GuidanceSource.BOTH
    elif left is not None:
        xs, source = left(rows) + lane_width_px / 2, GuidanceSource.LEFT_OFFSET
    elif right is not None:
        xs, source = right(rows) - lane_width_px / 2, GuidanceSource.RIGHT_OFFSET
    else:
        return GuidanceLine((), GuidanceSource.NONE)
    xs = np.clip(xs, 0.0, np.nextafter(float(width), 0.0))
    return GuidanceLine(tuple(zip(xs.tolist(), rows.tolist())), source)


@dataclass
class LanePipeline:
    """Full mask -> guidance processing with fixed calibration."""

    homography: Homography = field(default_factory=Homography.identity)
    lane_width_px: float = 100.0
    kernel: int = 3
    out_size: tuple[int, int] = (FRAME, FRAME)

    def run(self, mask: SegMask) -> tuple[list[PolyFit | None], GuidanceLine]:
        top = apply_ipm(mask, self.homography, self.out_size)
        top = erode(top, self.kernel)
        fits = fit_lanes(top)
        return fits, guidance_line(fits, self.lane_width_px, self.out_size[1], self.out_size[0])


def read_pgm(path) -> SegMask:
    """Read a binary (P5) PGM with maxval <= 255 as a label mask."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise LaneError("truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise LaneError("not a binary PGM (P5)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise LaneError("malformed PGM header") from exc
    if width <= 0 or height <= 0 or not 0 < maxval <= 255:
        raise LaneError("unsupported PGM dimensions or maxval")
    pos += 1  # single whitespace after maxval
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise LaneError("PGM raster is truncated")
    return SegMask(np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy())


def write_pgm(path, mask: SegMask) -> None:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode()
    Path(path).write_bytes(header + np.ascontiguousarray(mask.labels).tobytes())


def fit_report(fits, line: GuidanceLine) -> dict:
    names = ["left-left", "left", "right", "right-right"]
    lanes = {}
    for name, f in zip(names, fits):
        lanes[name] = None if f is None else {
            "degree": f.degree, "coefficients": list(f.coefficients), "metric": f.metric}
    return {
        "lanes": lanes,
        "guidance": {"source": line.source.value, "points": [list(p) for p in line.points]},
    }


__all__ = [
    "GuidanceLine", "GuidanceSource", "Homography", "LaneError", "LanePipeline", "PolyFit",
    "SegMask", "apply_ipm", "erode", "extract_lane_pixels", "fit_lanes", "guidance_line",
    "polyfit_least_squares", "read_pgm", "select_best_fit", "write_pgm",
]
