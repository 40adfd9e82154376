"""Luneburg GRIN lens design: index profile, unit-cell lattice and STL export.

All lengths are in metres unless a name says otherwise (``*_mm``).
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, UnrealizableIndexError

C0 = 299_792_458.0  # m/s
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LensSpec:
    """Geometry and material of a spherical GRIN lens.

    ``wavelength`` defaults to ``C0 / design_freq``; pass it explicitly to
    use a rounded design wavelength (e.g. 84 mm at 3.5 GHz).
    """

    radius_R: float = 0.196
    design_freq: float = 3.5e9
    cell_size_c: float = 0.014
    material_index_n: float = 2.99
    wavelength: Optional[float] = None
    lattice_origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.wavelength is None:
            if not self.design_freq > 0:
                raise ConfigurationError("design_freq must be positive")
            object.__setattr__(self, "wavelength", C0 / self.design_freq)
        object.__setattr__(self, "lattice_origin",
                           tuple(float(v) for v in self.lattice_origin))
        self.validate()

    def validate(self):
        if not self.radius_R > 0:
            raise ConfigurationError(f"radius_R must be > 0, got {self.radius_R}")
        if not self.cell_size_c > 0:
            raise ConfigurationError(f"cell_size_c must be > 0, got {self.cell_size_c}")
        if not self.wavelength > 0:
            raise ConfigurationError(f"wavelength must be > 0, got {self.wavelength}")
        if self.cell_size_c > self.wavelength / 4 * (1 + 1e-12):
            raise ConfigurationError(
                f"cell size {self.cell_size_c} exceeds wavelength/4 "
                f"({self.wavelength / 4}); lattice is not subwavelength")
        if self.material_index_n < SQRT2:
            raise ConfigurationError(
                f"material index {self.material_index_n} cannot realize the "
                f"centre index sqrt(2)")
        if len(self.lattice_origin) != 3:
            raise ConfigurationError("lattice_origin must be a 3-vector")

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.lattice_origin, dtype=float)

    @classmethod
    def reference_design(cls) -> "LensSpec":
        """392 mm lens, 14 mm cells, PLA n=2.99, design wavelength 84 mm."""
        return cls(radius_R=0.196, design_freq=3.5e9, cell_size_c=0.014,
                   material_index_n=2.99, wavelength=0.084)


def luneburg_index(r, R):
    """Luneburg profile sqrt(2 - (r/R)^2) inside the sphere, 1 outside.

    Accepts scalars or arrays.
    """
    if not R > 0:
        raise DomainError(f"lens radius must be positive, got {R}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise DomainError("radial coordinate must be non-negative")
    u2 = (r_arr / R) ** 2
    n = np.where(r_arr <= R, np.sqrt(np.maximum(2.0 - u2, 1.0)), 1.0)
    if np.ndim(r) == 0:
        return float(n)
    return n


# --- effective medium -----------------------------------------------------

class EffectiveMedium(Protocol):
    """Maps a cell fill fraction to an effective index and back."""

    def index_for_fill(self, f): ...

    def fill_for_index(self, n_target): ...


@dataclass(frozen=True)
class VolumeAverageMedium:
    """eps_eff = f * n_mat**2 + (1 - f) * 1 (air host)."""

    material_index_n: float

    def index_for_fill(self, f):
        f = np.asarray(f, dtype=float)
        return np.sqrt(f * self.material_index_n ** 2 + (1.0 - f))

    def fill_for_index(self, n_target):
        return fill_fraction_for_index(n_target, self.material_index_n)


class TabulatedMedium:
    """Effective index from a measured or simulated ``f -> n`` curve.

    The curve must be strictly increasing in both columns; inversion is
    linear interpolation.
    """

    def __init__(self, fill: Sequence[float], index: Sequence[float]):
        f = np.asarray(fill, dtype=float)
        n = np.asarray(index, dtype=float)
        if f.shape != n.shape or f.ndim != 1 or f.size < 2:
            raise ConfigurationError("fill and index tables must be 1-D, equal length, >= 2")
        if np.any(np.diff(f) <= 0) or np.any(np.diff(n) <= 0):
            raise ConfigurationError("tabulated medium must be strictly increasing")
        if f[0] < 0 or f[-1] > 1:
            raise ConfigurationError("fill fractions must lie in [0, 1]")
        self.fill = f
        self.index = n

    @classmethod
    def from_b_curve(cls, b_over_c: Sequence[float], index: Sequence[float]):
        """Build from an ``n(b/c)`` curve such as a CST sweep of the cell."""
        return cls(np.asarray(b_over_c, dtype=float) ** 3, index)

    def index_for_fill(self, f):
        return np.interp(f, self.fill, self.index)

    def fill_for_index(self, n_target):
        n = np.asarray(n_target, dtype=float)
        if np.any(n < self.index[0] - 1e-12) or np.any(n > self.index[-1] + 1e-12):
            raise UnrealizableIndexError(
                f"index outside tabulated range [{self.index[0]}, {self.index[-1]}]")
        out = np.interp(n, self.index, self.fill)
        return float(out) if np.ndim(n_target) == 0 else out


def fill_fraction_for_index(n_target, n_material):
    """Fill fraction f solving n_target**2 = f*n_material**2 + (1 - f)."""
    n = np.asarray(n_target, dtype=float)
    if not n_material > 1:
        raise DomainError(f"material index must exceed 1, got {n_material}")
    tol = 1e-12
    if np.any(n < 1 - tol) or np.any(n > n_material + tol) or np.any(np.isnan(n)):
        raise UnrealizableIndexError(
            f"target index must lie in [1, {n_material}]")
    f = np.clip((n * n - 1.0) / (n_material ** 2 - 1.0), 0.0, 1.0)
    return float(f) if np.ndim(n_target) == 0 else f


def b_from_fill(f, c):
    """Edge length of the solid cube inclusion giving fill fraction f."""
    if not c > 0:
        raise DomainError(f"cell size must be positive, got {c}")
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr < 0) or np.any(f_arr > 1) or np.any(np.isnan(f_arr)):
        raise DomainError("fill fraction must lie in [0, 1]")
    b = c * np.cbrt(f_arr)
    return float(b) if np.ndim(f) == 0 else b


def fill_from_b(b, c):
    return (np.asarray(b, dtype=float) / c) ** 3


# --- lattice --------------------------------------------------------------

@dataclass(frozen=True)
class UnitCell:
    index_ijk: tuple
    center_xyz: tuple
    radial_r: float
    target_index_n: float
    fill_fraction_f: float
    fill_param_b: float
    segment: int


@dataclass(frozen=True, eq=False)
class LensLattice:
    """Cubic lattice of unit cells covering the lens bounding cube.

    Cell data is stored column-wise; ``cells`` materializes UnitCell records.
    """

    spec: LensSpec
    ijk: np.ndarray          # (N, 3) int
    centers: np.ndarray      # (N, 3) m
    radial_r: np.ndarray     # (N,)
    target_index: np.ndarray
    fill_fraction: np.ndarray
    fill_b: np.ndarray
    octant_labels: np.ndarray
    shape: tuple = field(default=(0, 0, 0))

    def __len__(self):
        return len(self.radial_r)

    @property
    def cells(self):
        return [
            UnitCell(tuple(int(v) for v in self.ijk[k]),
                     tuple(float(v) for v in self.centers[k]),
                     float(self.radial_r[k]), float(self.target_index[k]),
                     float(self.fill_fraction[k]), float(self.fill_b[k]),
                     int(self.octant_labels[k]))
            for k in range(len(self))
        ]

    @property
    def solid_mask(self) -> np.ndarray:
        return self.fill_b > 0

    def b_grid(self) -> np.ndarray:
        """b values reshaped onto the (ni, nj, nk) lattice."""
        return self.fill_b.reshape(self.shape)


def octant_label(offset: np.ndarray) -> np.ndarray:
    """Segment id 0..7: bit 0/1/2 set when x/y/z is negative.

    Points on a symmetry plane go to the non-negative side.
    """
    neg = np.asarray(offset) < 0
    return (neg[..., 0] * 1 + neg[..., 1] * 2 + neg[..., 2] * 4).astype(np.int8)


def _cells_per_axis(R, c):
    span = 2.0 * R / c
    nearest = round(span)
    if nearest >= 1 and abs(span - nearest) <= 1e-9 * max(span, 1.0):
        return int(nearest)
    return max(1, math.ceil(span))


def discretize_lens(spec: LensSpec, medium: Optional[EffectiveMedium] = None) -> LensLattice:
    """Sample the Luneburg profile at every cell centre of the bounding cube.

    Cells whose centres lie outside the sphere are kept as air (n=1, b=0) so
    the lattice covers all candidate sites.
    """
    spec.validate()
    if medium is None:
        medium = VolumeAverageMedium(spec.material_index_n)
    R, c = spec.radius_R, spec.cell_size_c
    m = _cells_per_axis(R, c)
    steps = np.arange(m) - (m - 1) / 2.0
    ii, jj, kk = np.meshgrid(np.arange(m), np.arange(m), np.arange(m), indexing="ij")
    ijk = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
    rel = steps[ijk] * c
    centers = spec.origin + rel
    # sorting the squares keeps r bit-identical under axis permutations
    r = np.sqrt(np.sort(rel * rel, axis=1).sum(axis=1))
    n = luneburg_index(r, R)
    inside = r <= R
    n = np.where(inside, n, 1.0)
    f = np.where(inside, medium.fill_for_index(n), 0.0)
    b = b_from_fill(f, c)
    labels = octant_label(rel)
    return LensLattice(spec=spec, ijk=ijk.astype(np.int32), centers=centers,
                       radial_r=r, target_index=n, fill_fraction=f, fill_b=b,
                       octant_labels=labels, shape=(m, m, m))


# --- STL ------------------------------------------------------------------

STL_DTYPE = np.dtype([
    ("normal", "<f4", (3,)),
    ("vertices", "<f4", (3, 3)),
    ("attr", "<u2"),
])

# unit cube corners in [-0.5, 0.5]^3 and outward-wound faces (two triangles each)
_CORNERS = np.array([[x, y, z] for x in (-0.5, 0.5) for y in (-0.5, 0.5)
                     for z in (-0.5, 0.5)])
_FACES = [
    ((0, 1, 3), (0, 3, 2), (-1, 0, 0)),
    ((4, 6, 7), (4, 7, 5), (1, 0, 0)),
    ((0, 4, 5), (0, 5, 1), (0, -1, 0)),
    ((2, 3, 7), (2, 7, 6), (0, 1, 0)),
    ((0, 2, 6), (0, 6, 4), (0, 0, -1)),
    ((1, 5, 7), (1, 7, 3), (0, 0, 1)),
]
_TRI_IDX = np.array([t for a, b_, _ in _FACES for t in (a, b_)])
_TRI_NORMALS = np.array([nrm for _, _, nrm in _FACES for _ in range(2)], dtype=float)


def cube_triangles(centers: np.ndarray, sides: np.ndarray) -> np.ndarray:
    """Structured STL records for axis-aligned cubes (12 per cube)."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)
    sides = np.asarray(sides, dtype=float).reshape(-1)
    tri = _CORNERS[_TRI_IDX]  # (12, 3, 3)
    verts = centers[:, None, None, :] + sides[:, None, None, None] * tri[None]
    out = np.zeros(len(centers) * 12, dtype=STL_DTYPE)
    out["vertices"] = verts.reshape(-1, 3, 3)
    out["normal"] = np.tile(_TRI_NORMALS, (len(centers), 1))
    return out


def stl_bytes(records: np.ndarray, header: bytes = b"") -> bytes:
    head = header[:80].ljust(80, b" ")
    buf = io.BytesIO()
    buf.write(head)
    buf.write(np.uint32(len(records)).astype("<u4").tobytes())
    buf.write(np.ascontiguousarray(records, dtype=STL_DTYPE).tobytes())
    return buf.getvalue()


def read_stl(data: bytes) -> np.ndarray:
    if len(data) < 84:
        raise DomainError("STL data shorter than its 84-byte preamble")
    count = int(np.frombuffer(data[80:84], dtype="<u4")[0])
    body = data[84:]
    if len(body) != count * STL_DTYPE.itemsize:
        raise DomainError(f"STL body size does not match {count} triangles")
    return np.frombuffer(body, dtype=STL_DTYPE)


def export_stl(lattice: LensLattice, segment: Optional[int] = None,
               units: str = "mm") -> bytes:
    """Binary STL of every solid cell (or one octant of them).

    Each cell with b > 0 becomes a cube of side b at its centre. Coordinates
    are written in ``units`` ("mm" or "m").
    """
    if segment is not None and segment not in range(8):
        raise DomainError(f"segment must be in 0..7, got {segment}")
    scale = {"mm": 1e3, "m": 1.0}[units]
    mask = lattice.solid_mask & (lattice.radial_r <= lattice.spec.radius_R)
    if segment is not None:
        mask &= lattice.octant_labels == segment
    if not mask.any():
        warnings.warn("STL selection is empty; writing 0-triangle mesh", stacklevel=2)
    recs = cube_triangles(lattice.centers[mask] * scale, lattice.fill_b[mask] * scale)
    label = "all" if segment is None else f"segment {segment}"
    header = f"grin_rydberg luneburg lattice {label} [{units}]".encode("ascii")
    return stl_bytes(recs, header)


# --- CSV ------------------------------------------------------------------

LATTICE_HEADER = "i,j,k,x_mm,y_mm,z_mm,n_target,b_mm,segment"


def lattice_csv(lattice: LensLattice) -> str:
    lines = [LATTICE_HEADER]
    xyz = lattice.centers * 1e3
    b = lattice.fill_b * 1e3
    for k in range(len(lattice)):
        i, j, kk = lattice.ijk[k]
        lines.append(
            f"{i},{j},{kk},{xyz[k, 0]:.9g},{xyz[k, 1]:.9g},{xyz[k, 2]:.9g},"
            f"{lattice.target_index[k]:.9g},{b[k]:.9g},{lattice.octant_labels[k]}")
    return "\n".join(lines) + "\n"


def iter_segments(lattice: LensLattice) -> Iterable[tuple]:
    for s in range(8):
        yield s, export_stl(lattice, s)
