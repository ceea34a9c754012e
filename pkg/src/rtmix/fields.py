"""Discrete fields on a periodic-in-y strip and their calculus operators.

Geometry: (y, z) in [0, L] x [-H, H] on a uniform cell grid, periodic in
the transverse direction y, wall-closed in z (the walls stand in for the
far field, so valid runs keep all activity away from them).  Scalars live
at cell centres.  Velocity components are staggered (MAC): u_y sits on
y-faces, u_z on z-faces, which keeps every first difference a two-point
centred one and makes the pressure projection exactly divergence-free.

The vertical cell count must be even so that z = 0 falls on a cell edge;
integrals against the sharp stratified reference are then exact.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

SNAPSHOT_MAGIC = b"RTMIX1\x00\x00"
SNAPSHOT_HEADER_SIZE = 64

# |f| at the walls above this fraction of max|f| suggests the truncated
# domain is cutting off the integrand.
TRUNCATION_RTOL = 1e-8


class TruncationWarning(UserWarning):
    """Integrand does not appear to vanish at the z-walls."""


@dataclass(frozen=True)
class Grid:
    """Uniform cell grid on [0, L] x [-H, H].

    y is periodic with ny cells; z spans [-H, H] with nz cells and a cell
    edge exactly at z = 0.
    """

    L: float
    H: float
    ny: int
    nz: int

    def __post_init__(self):
        if self.L <= 0 or self.H <= 0:
            raise ValueError("L and H must be positive")
        if self.ny < 4 or self.ny % 2 != 0:
            raise ValueError("ny must be even and >= 4")
        if self.nz < 8 or self.nz % 2 != 0:
            raise ValueError("nz must be even and >= 8 (even keeps a cell edge at z = 0)")

    @property
    def dy(self) -> float:
        return self.L / self.ny

    @property
    def dz(self) -> float:
        return 2.0 * self.H / self.nz

    @property
    def y(self) -> np.ndarray:
        """Cell-centre y coordinates, shape (ny,)."""
        return (np.arange(self.ny) + 0.5) * self.dy

    @property
    def z(self) -> np.ndarray:
        """Cell-centre z coordinates, shape (nz,)."""
        return -self.H + (np.arange(self.nz) + 0.5) * self.dz

    @property
    def y_faces(self) -> np.ndarray:
        """y-face coordinates y_{j+1/2}, shape (ny,)."""
        return (np.arange(self.ny) + 1.0) * self.dy

    @property
    def z_faces(self) -> np.ndarray:
        """Interior-and-top z-face coordinates z_{k+1/2}, shape (nz,).

        Index k is the face between cells k and k+1; the last entry is the
        top wall.  The bottom wall face carries no storage.
        """
        return -self.H + (np.arange(self.nz) + 1.0) * self.dz

    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nz)


@dataclass
class ScalarField:
    """Cell-centred scalar, values[j, k] at (y_j, z_k)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape():
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.shape()}")

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape(), float(c)))

    @classmethod
    def from_function(cls, grid: Grid, f) -> "ScalarField":
        yy, zz = np.meshgrid(grid.y, grid.z, indexing="ij")
        return cls(grid, np.asarray(f(yy, zz), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VelocityField:
    """Staggered (MAC) velocity: u_y[j, k] on the y-face (y_{j+1/2}, z_k),
    u_z[j, k] on the z-face (y_j, z_{k+1/2}).

    u_z[:, nz-1] is the top wall face and is held at zero; the bottom wall
    face is implicit and also zero.
    """

    grid: Grid
    u_y: np.ndarray
    u_z: np.ndarray

    def __post_init__(self):
        self.u_y = np.asarray(self.u_y, dtype=float)
        self.u_z = np.asarray(self.u_z, dtype=float)
        if self.u_y.shape != self.grid.shape() or self.u_z.shape != self.grid.shape():
            raise ValueError("velocity component shapes must match the grid")

    @classmethod
    def zeros(cls, grid: Grid) -> "VelocityField":
        return cls(grid, np.zeros(grid.shape()), np.zeros(grid.shape()))

    def copy(self) -> "VelocityField":
        return VelocityField(self.grid, self.u_y.copy(), self.u_z.copy())

    def center_components(self) -> tuple[np.ndarray, np.ndarray]:
        """Second-order interpolation of both components to cell centres."""
        uc = 0.5 * (self.u_y + np.roll(self.u_y, 1, axis=0))
        wz = self.u_z
        w_below = np.concatenate([np.zeros((self.grid.ny, 1)), wz[:, :-1]], axis=1)
        wc = 0.5 * (wz + w_below)
        return uc, wc


def horizontal_average(f: ScalarField) -> np.ndarray:
    """Mean over the periodic y direction; exact for the uniform grid."""
    return f.values.mean(axis=0)


def truncation_suspect(f: ScalarField, rtol: float = TRUNCATION_RTOL) -> bool:
    """True if |f| at the z-walls is not negligible against max|f|."""
    v = np.abs(f.values)
    scale = v.max()
    if scale == 0.0:
        return False
    wall = max(v[:, 0].max(), v[:, -1].max())
    return wall > rtol * scale


def normalized_integral(f: ScalarField, warn: bool = True) -> float:
    """Integral over z of the y-mean of f (midpoint rule over cells).

    The integrand is assumed to decay inside [-H, H]; a TruncationWarning
    is emitted when the wall values suggest otherwise.
    """
    if warn and truncation_suspect(f):
        warnings.warn(
            "integrand does not vanish at z = +/-H; domain truncation suspect",
            TruncationWarning,
            stacklevel=2,
        )
    return float(horizontal_average(f).sum() * f.grid.dz)


def gradient(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Centred gradient at cell centres.

    Periodic wrap in y; second-order one-sided closure at the z ends.
    """
    g = f.grid
    v = f.values
    dfdy = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2.0 * g.dy)
    dfdz = np.empty_like(v)
    dfdz[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2.0 * g.dz)
    dfdz[:, 0] = (-3.0 * v[:, 0] + 4.0 * v[:, 1] - v[:, 2]) / (2.0 * g.dz)
    dfdz[:, -1] = (3.0 * v[:, -1] - 4.0 * v[:, -2] + v[:, -3]) / (2.0 * g.dz)
    return ScalarField(g, dfdy), ScalarField(g, dfdz)


def divergence(v: VelocityField) -> ScalarField:
    """Divergence at cell centres from the face-stored components.

    The two-point differences are centred at each cell; the wall faces
    carry zero normal velocity.
    """
    g = v.grid
    ddy = (v.u_y - np.roll(v.u_y, 1, axis=0)) / g.dy
    w = v.u_z
    w_below = np.concatenate([np.zeros((g.ny, 1)), w[:, :-1]], axis=1)
    ddz = (w - w_below) / g.dz
    return ScalarField(g, ddy + ddz)


def laplacian(f: ScalarField) -> ScalarField:
    """Five-point Laplacian; periodic in y, mirror (Neumann) closure in z."""
    g = f.grid
    v = f.values
    lap_y = (np.roll(v, -1, axis=0) - 2.0 * v + np.roll(v, 1, axis=0)) / g.dy**2
    vz = np.concatenate([v[:, :1], v, v[:, -1:]], axis=1)
    lap_z = (vz[:, 2:] - 2.0 * vz[:, 1:-1] + vz[:, :-2]) / g.dz**2
    return ScalarField(g, lap_y + lap_z)


def write_snapshot(path, f: ScalarField, time: float) -> None:
    """Binary snapshot: 64-byte header then row-major float64 values.

    Header layout (little endian): magic "RTMIX1" padded to 8 bytes, then
    ny, nz as 8-byte integers and L, H, time as 8-byte floats; the rest of
    the 64 bytes is zero padding.
    """
    g = f.grid
    header = struct.pack("<8sqqddd", SNAPSHOT_MAGIC, g.ny, g.nz, g.L, g.H, float(time))
    header = header.ljust(SNAPSHOT_HEADER_SIZE, b"\x00")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[ScalarField, float]:
    with open(path, "rb") as fh:
        header = fh.read(SNAPSHOT_HEADER_SIZE)
        if len(header) != SNAPSHOT_HEADER_SIZE:
            raise ValueError("truncated snapshot header")
        magic, ny, nz, L, H, time = struct.unpack("<8sqqddd", header[:48])
        if magic != SNAPSHOT_MAGIC:
            raise ValueError("not a field snapshot (bad magic)")
        data = np.frombuffer(fh.read(ny * nz * 8), dtype="<f8").reshape(ny, nz)
    grid = Grid(L=L, H=H, ny=int(ny), nz=int(nz))
    return ScalarField(grid, data.copy()), float(time)
