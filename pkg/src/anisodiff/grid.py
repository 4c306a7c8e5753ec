"""Uniform cell-centred tensor grids over boxes prod_i [-L_i, L_i].

Values are stored as C-ordered numpy arrays of shape ``cells`` (axis 1 is the
slowest index).  Discrete derivatives use zero extension outside the box,
which is the homogeneous Dirichlet truncation of R^N used by the solver.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_CELLS = 1 << 26
GFB1_MAGIC = b"GFB1"


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    half_length: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "half_length", tuple(float(x) for x in self.half_length))
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        if len(self.half_length) != len(self.cells) or not self.cells:
            raise GridError("half_length and cells must have the same positive length")
        if any(not L > 0 for L in self.half_length):
            raise GridError(f"half lengths must be positive, got {self.half_length}")
        if any(n < 8 or n % 2 for n in self.cells):
            raise GridError(f"cell counts must be even and >= 8, got {self.cells}")
        if int(np.prod(self.cells, dtype=np.int64)) > MAX_CELLS:
            raise GridError(f"{self.cells} exceeds the cell cap of {MAX_CELLS}")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for L, n in zip(self.half_length, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    def centers(self, axis: int) -> np.ndarray:
        L, n = self.half_length[axis], self.cells[axis]
        h = 2.0 * L / n
        return -L + h * (np.arange(n) + 0.5)

    def mesh(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for i in range(self.dim):
            shp = [1] * self.dim
            shp[i] = self.cells[i]
            out.append(self.centers(i).reshape(shp))
        return out

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.half_length, tuple(n * factor for n in self.cells))


@dataclass
class GridFunction:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != self.spec.shape:
            if self.values.size != int(np.prod(self.spec.shape)):
                raise GridError(f"value count {self.values.size} does not match grid {self.spec.shape}")
            self.values = self.values.reshape(self.spec.shape)
        if not np.all(np.isfinite(self.values)):
            raise GridError("grid function has non-finite values")

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridFunction":
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def sample(cls, spec: GridSpec, fn) -> "GridFunction":
        """Evaluate ``fn(*coords)`` at the cell centres."""
        return cls(spec, np.broadcast_to(fn(*spec.mesh()), spec.shape).copy())

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.spec, self.values * c)

    __rmul__ = __mul__


def _shifted(a: np.ndarray, axis: int, step: int) -> np.ndarray:
    """a[k + step] along ``axis`` with zero extension."""
    out = np.zeros_like(a)
    n = a.shape[axis]
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis] = slice(step, n)
        dst[axis] = slice(0, n - step)
    else:
        src[axis] = slice(0, n + step)
        dst[axis] = slice(-step, n)
    out[tuple(dst)] = a[tuple(src)]
    return out


def forward_difference(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (_shifted(a, axis, 1) - a) / h


def backward_difference(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (a - _shifted(a, axis, -1)) / h


def diff_forward(g: GridFunction, axis: int) -> GridFunction:
    """(g[k+e_i] - g[k]) / h_i, the value at face k+1/2, zero beyond the box."""
    _check_axis(g.spec, axis)
    return GridFunction(g.spec, forward_difference(g.values, axis, g.spec.spacing[axis]))


def diff_backward(g: GridFunction, axis: int) -> GridFunction:
    """(g[k] - g[k-e_i]) / h_i with g = 0 before the first cell."""
    _check_axis(g.spec, axis)
    return GridFunction(g.spec, backward_difference(g.values, axis, g.spec.spacing[axis]))


def _check_axis(spec: GridSpec, axis: int):
    if not 0 <= axis < spec.dim:
        raise GridError(f"axis {axis} out of range for a {spec.dim}-d grid")


def cell_sum(a: np.ndarray) -> float:
    # np.add.reduce over a contiguous 1-d buffer is a fixed pairwise tree
    return float(np.add.reduce(np.ascontiguousarray(a).ravel()))


def integrate(g: GridFunction | np.ndarray, spec: GridSpec | None = None) -> float:
    if isinstance(g, GridFunction):
        spec, a = g.spec, g.values
    else:
        a = g
    return spec.cell_volume * cell_sum(a)


def norm_Lq(g: GridFunction, q: float) -> float:
    if not q >= 1:
        raise GridError(f"norm_Lq needs q >= 1, got {q}")
    a = np.abs(g.values)
    if q == 1:
        return g.spec.cell_volume * cell_sum(a)
    m = a.max(initial=0.0)
    if m == 0.0:
        return 0.0
    # scale out the max so that large q does not overflow
    return m * (g.spec.cell_volume * cell_sum((a / m) ** q)) ** (1.0 / q)


def norm_Linf(g: GridFunction) -> float:
    return float(np.abs(g.values).max(initial=0.0))


def support_halfwidth(g: GridFunction | np.ndarray, threshold: float = 0.0, spec: GridSpec | None = None):
    """Per-axis half-widths R_i with |g| <= threshold outside prod_i [-R_i, R_i].

    R_i is the largest |x_i| over cell centres where |g| exceeds the
    threshold, padded by h_i / 2 so the box covers those cells entirely;
    0 when no cell exceeds the threshold.
    """
    if isinstance(g, GridFunction):
        spec, a = g.spec, g.values
    else:
        a = g
    mask = np.abs(a) > threshold
    out = []
    for i in range(spec.dim):
        others = tuple(j for j in range(spec.dim) if j != i)
        hit = np.any(mask, axis=others) if others else mask
        idx = np.nonzero(hit)[0]
        if idx.size == 0:
            out.append(0.0)
        else:
            x = spec.centers(i)
            out.append(float(max(abs(x[idx[0]]), abs(x[idx[-1]]))) + 0.5 * spec.spacing[i])
    return np.array(out)


def collar_cells(g: GridFunction | np.ndarray, threshold: float = 0.0, spec: GridSpec | None = None):
    """Per-axis count of boundary cells, on the nearer side, that are all below threshold."""
    if isinstance(g, GridFunction):
        spec, a = g.spec, g.values
    else:
        a = g
    mask = np.abs(a) > threshold
    out = []
    for i in range(spec.dim):
        others = tuple(j for j in range(spec.dim) if j != i)
        hit = np.any(mask, axis=others) if others else mask
        idx = np.nonzero(hit)[0]
        n = spec.cells[i]
        out.append(n // 2 if idx.size == 0 else int(min(idx[0], n - 1 - idx[-1])))
    return np.array(out)


@dataclass(frozen=True)
class AnisotropicCube:
    """K_r around ``center``: half-extents r^(1/p_i) per axis.

    ``intrinsic=False`` gives the plain cube [-r, r]^N around the centre.
    """

    center: tuple[float, ...]
    r: float
    p: tuple[float, ...]
    intrinsic: bool = True

    def __post_init__(self):
        if not self.r > 0:
            raise GridError(f"cube radius must be positive, got {self.r}")
        if len(self.center) != len(self.p):
            raise GridError("center and p must have the same length")

    @property
    def extents(self) -> np.ndarray:
        if self.intrinsic:
            return np.array([self.r ** (1.0 / q) for q in self.p])
        return np.full(len(self.p), float(self.r))

    def contains(self, other: "AnisotropicCube") -> bool:
        lo = np.asarray(self.center) - self.extents
        hi = np.asarray(self.center) + self.extents
        olo = np.asarray(other.center) - other.extents
        ohi = np.asarray(other.center) + other.extents
        return bool(np.all(lo <= olo) and np.all(ohi <= hi))


@dataclass(frozen=True)
class CylinderView:
    """Index ranges of a space-time cylinder inside recorded data."""

    space: tuple[slice, ...]
    time: np.ndarray  # indices into the snapshot list, increasing

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(s.stop - s.start for s in self.space)


def restrict_to_cylinder(spec: GridSpec, times, cube: AnisotropicCube, t_top: float, duration: float | None = None):
    """Cells whose centres lie in ``cube`` and snapshot indices with t in (t_top - duration, t_top].

    ``duration`` defaults to ``cube.r`` (the intrinsic cylinder Q_r).  The
    cube must stay at least one cell away from the box boundary and cover at
    least one cell per axis.
    """
    times = np.asarray(times, dtype=float)
    duration = cube.r if duration is None else duration
    ext = cube.extents
    c = np.asarray(cube.center, dtype=float)
    space = []
    for i in range(spec.dim):
        L, h = spec.half_length[i], spec.spacing[i]
        if c[i] - ext[i] < -L + h or c[i] + ext[i] > L - h:
            raise GridError(f"cylinder leaves the domain on axis {i + 1}")
        x = spec.centers(i)
        idx = np.nonzero((x > c[i] - ext[i]) & (x < c[i] + ext[i]))[0]
        if idx.size == 0:
            raise GridError(f"cylinder is thinner than one cell on axis {i + 1}")
        space.append(slice(int(idx[0]), int(idx[-1]) + 1))
    t_lo = t_top - duration
    if times.size == 0 or t_lo < times[0] - 1e-12 * max(1.0, abs(t_top)) or t_top > times[-1] + 1e-12 * max(1.0, abs(t_top)):
        raise GridError("cylinder time window is outside the recorded range")
    tidx = np.nonzero((times >= t_lo) & (times <= t_top))[0]
    return CylinderView(tuple(space), tidx)


def write_gfb1(path, g: GridFunction) -> None:
    spec = g.spec
    with open(path, "wb") as fh:
        fh.write(GFB1_MAGIC)
        fh.write(struct.pack("<I", spec.dim))
        for n, L in zip(spec.cells, spec.half_length):
            fh.write(struct.pack("<Qd", n, L))
        fh.write(np.ascontiguousarray(g.values, dtype="<f8").tobytes())


def read_gfb1(path) -> GridFunction:
    data = Path(path).read_bytes()
    if data[:4] != GFB1_MAGIC:
        raise GridError(f"{path}: bad magic {data[:4]!r}")
    (N,) = struct.unpack_from("<I", data, 4)
    off = 8
    cells, half = [], []
    for _ in range(N):
        n, L = struct.unpack_from("<Qd", data, off)
        cells.append(n)
        half.append(L)
        off += 16
    count = int(np.prod(cells, dtype=np.int64))
    if len(data) - off != 8 * count:
        raise GridError(f"{path}: expected {8 * count} value bytes, found {len(data) - off}")
    values = np.frombuffer(data, dtype="<f8", offset=off).astype(np.float64).reshape(cells)
    return GridFunction(GridSpec(tuple(half), tuple(cells)), values)
