"""Focal field of the lens: asymptotic amplitude, Huygens sums and gain."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import DomainError, SingularDistanceError
from .lens import LensSpec
from .raytrace import optical_path_profile

ETA0 = 376.730313668  # ohm
SIMULATED = "simulated"
MEASURED = "measured"


@dataclass(frozen=True)
class AperturePatch:
    center: np.ndarray
    area: float
    current_J0: complex
    exit_direction: np.ndarray
    phase_psi: float

    def __post_init__(self):
        if not self.area > 0:
            raise DomainError("patch area must be positive")
        d = np.asarray(self.exit_direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise DomainError("exit_direction must be a unit vector")


class PatchSet:
    """Column-wise aperture patches (what the field sums actually consume)."""

    def __init__(self, centers, areas, currents, phases, directions=None):
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        n = len(self.centers)
        self.areas = np.broadcast_to(np.asarray(areas, dtype=float), (n,)).copy()
        self.currents = np.broadcast_to(np.asarray(currents, dtype=complex), (n,)).copy()
        self.phases = np.broadcast_to(np.asarray(phases, dtype=float), (n,)).copy()
        if directions is None:
            directions = np.tile([0.0, 0.0, 1.0], (n, 1))
        self.directions = np.asarray(directions, dtype=float).reshape(-1, 3)
        if n == 0:
            raise DomainError("aperture has no patches")
        if np.any(self.areas <= 0):
            raise DomainError("patch areas must be positive")

    @classmethod
    def from_patches(cls, patches: Sequence[AperturePatch]) -> "PatchSet":
        patches = list(patches)
        if not patches:
            raise DomainError("aperture has no patches")
        return cls([p.center for p in patches], [p.area for p in patches],
                   [p.current_J0 for p in patches], [p.phase_psi for p in patches],
                   [p.exit_direction for p in patches])

    def __len__(self):
        return len(self.centers)

    def scaled(self, alpha) -> "PatchSet":
        return PatchSet(self.centers, self.areas, self.currents * alpha,
                        self.phases, self.directions)

    def patches(self) -> List[AperturePatch]:
        return [AperturePatch(self.centers[k], float(self.areas[k]),
                              complex(self.currents[k]), self.directions[k],
                              float(self.phases[k]))
                for k in range(len(self))]


@dataclass(frozen=True)
class FieldSample:
    position: np.ndarray
    amplitude: complex
    reference: float = 1.0

    @property
    def magnitude_db(self) -> float:
        return 20.0 * math.log10(abs(self.amplitude) / self.reference)


@dataclass(frozen=True)
class GainEstimate:
    gamma_linear: float
    source: str = SIMULATED

    @property
    def gamma_db(self) -> float:
        return 20.0 * math.log10(self.gamma_linear)

    @property
    def gamma_db_power(self) -> float:
        """The same ratio read as a power ratio (10 log10)."""
        return 10.0 * math.log10(self.gamma_linear)

    @classmethod
    def from_db(cls, gamma_db, source=SIMULATED):
        return cls(10.0 ** (gamma_db / 20.0), source)


def analytic_focal_amplitude(rho, spec: LensSpec, source_strength=1.0,
                             exit_direction=(0.0, 0.0, 1.0),
                             current_direction=(1.0, 0.0, 0.0),
                             wavelength: Optional[float] = None):
    """Asymptotic ray-optics focal field magnitude at radial offset ``rho``.

    |E| = k eta0 |s x (s x J0)| / (4 pi sqrt(R) (R^2 - rho^2)^(1/4))

    ``source_strength`` is either a scalar current magnitude (applied along
    ``current_direction``) or a full 3-vector J0. Diverges as rho -> R; the
    result is only meaningful for rho <= R - wavelength/4.
    """
    R = spec.radius_R
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0) or np.any(rho_arr >= R):
        raise DomainError("rho must satisfy 0 <= rho < R")
    lam = spec.wavelength if wavelength is None else wavelength
    k = 2 * math.pi / lam
    s_hat = np.asarray(exit_direction, dtype=float)
    s_hat = s_hat / np.linalg.norm(s_hat)
    if np.ndim(source_strength) == 0:
        j_dir = np.asarray(current_direction, dtype=float)
        j0 = abs(source_strength) * j_dir / np.linalg.norm(j_dir)
    else:
        j0 = np.asarray(source_strength, dtype=complex)
    transverse = np.linalg.norm(np.cross(s_hat, np.cross(s_hat, j0)))
    mag = k * ETA0 * transverse / (4 * math.pi * math.sqrt(R) * (R * R - rho_arr ** 2) ** 0.25)
    return float(mag) if np.ndim(rho) == 0 else mag


def analytic_validity_limit(spec: LensSpec, wavelength: Optional[float] = None) -> float:
    lam = spec.wavelength if wavelength is None else wavelength
    return spec.radius_R - lam / 4


def huygens_field(patches, obs, wavelength: float):
    """Coherent scalar Huygens sum at one or more observation points.

    E(obs) = sum_j J0_j A_j exp(i k (psi_j + d_j)) / d_j, d_j = |obs - c_j|.
    ``obs`` may be a 3-vector or an (M, 3) array.
    """
    ps = patches if isinstance(patches, PatchSet) else PatchSet.from_patches(patches)
    if not wavelength > 0:
        raise DomainError("wavelength must be positive")
    k = 2 * math.pi / wavelength
    pts = np.asarray(obs, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    weights = ps.currents * ps.areas * np.exp(1j * k * ps.phases)
    out = np.empty(len(pts), dtype=complex)
    # chunk so the distance matrix stays small
    chunk = max(1, 2_000_000 // len(ps))
    for lo in range(0, len(pts), chunk):
        diff = pts[lo:lo + chunk, None, :] - ps.centers[None, :, :]
        dist = np.sqrt(np.einsum("mnk,mnk->mn", diff, diff))
        if np.any(dist == 0):
            raise SingularDistanceError("observation point coincides with a patch centre")
        out[lo:lo + chunk] = (np.exp(1j * k * dist) / dist) @ weights
    return complex(out[0]) if single else out


def incident_reference(wavelength: float, j0=1.0) -> float:
    """Field level an infinite uniform aperture of current j0 produces.

    With the kernel exp(ikd)/d, integrating over an infinite plane gives
    2*pi*i/k * j0, so a plane wave without the lens has |E| = wavelength*|j0|
    in the units used by :func:`huygens_field`.
    """
    return wavelength * abs(j0)


AXES = {"x": 0, "y": 1, "z": 2}


def field_scan(patches, axis: str, scan_range, wavelength: float,
               through=(0.0, 0.0, 0.0), reference: float = 1.0) -> List[FieldSample]:
    """Sample the Huygens field along ``axis`` through the point ``through``.

    ``scan_range`` is ``(start, stop, step)`` relative to ``through``;
    ``stop`` is included when it falls on the grid.
    """
    if axis not in AXES:
        raise DomainError(f"axis must be one of x, y, z; got {axis!r}")
    start, stop, step = scan_range
    if not step > 0:
        raise DomainError("scan step must be positive")
    if stop < start:
        raise DomainError("scan range is empty")
    count = int(math.floor((stop - start) / step * (1 + 1e-12))) + 1
    coords = start + step * np.arange(count)
    base = np.asarray(through, dtype=float)
    pts = np.tile(base, (count, 1))
    pts[:, AXES[axis]] += coords
    values = huygens_field(patches, pts, wavelength)
    return [FieldSample(pts[m], complex(values[m]), reference) for m in range(count)]


SCAN_HEADER = "coord_mm,re,im,mag_db"


def scan_csv(samples: Sequence[FieldSample], axis: str, through=(0.0, 0.0, 0.0)) -> str:
    idx = AXES[axis]
    lines = [SCAN_HEADER]
    for smp in samples:
        coord = (smp.position[idx] - through[idx]) * 1e3
        lines.append(f"{coord:.9g},{smp.amplitude.real:.9g},{smp.amplitude.imag:.9g},"
                     f"{smp.magnitude_db:.2f}")
    return "\n".join(lines) + "\n"


def focusing_gain(e_with_lens: float, e_incident: float, source: str = SIMULATED) -> GainEstimate:
    if not e_incident > 0:
        raise DomainError("incident field must be positive")
    if e_with_lens < 0:
        raise DomainError("field magnitude must be non-negative")
    return GainEstimate(float(e_with_lens) / float(e_incident), source)


# --- aperture construction -------------------------------------------------

def disc_grid(radius: float, pitch: float):
    """Square-grid patch centres inside a disc (z=0) and the patch area."""
    m = int(math.ceil(radius / pitch))
    u = (np.arange(-m, m) + 0.5) * pitch
    xx, yy = np.meshgrid(u, u, indexing="ij")
    keep = xx ** 2 + yy ** 2 < radius ** 2
    pts = np.stack([xx[keep], yy[keep], np.zeros(keep.sum())], axis=1)
    return pts, pitch * pitch


def focused_disc_aperture(diameter: float, focal_distance: float, pitch: float,
                          j0=1.0) -> PatchSet:
    """Uniform disc in the z=0 plane phased to focus at (0, 0, focal_distance)."""
    pts, area = disc_grid(diameter / 2, pitch)
    focus = np.array([0.0, 0.0, focal_distance])
    dist = np.linalg.norm(focus - pts, axis=1)
    return PatchSet(pts, area, j0, -dist)


def lens_aperture(spec: LensSpec, pitch: float, trace_step: Optional[float] = None,
                  j0=1.0, radial_samples: int = 96, direction=(0.0, 0.0, 1.0)) -> PatchSet:
    """Equivalent aperture on the lens mid-plane disc, phased by ray tracing.

    A plane wave along +z is traced through the lens at ``radial_samples``
    offsets. Each patch at radius rho radiates with phase
    psi_exit(rho) - |exit(rho) - patch|, i.e. the optical path accumulated
    to the exit crossing, back-propagated in free space to the patch, so the
    sum reproduces the traced wavefront at the exit surface.
    """
    R = spec.radius_R
    if trace_step is None:
        trace_step = 1e-2 * R
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if not np.allclose(d, [0, 0, 1]):
        raise DomainError("lens_aperture currently supports +z incidence only")
    pts, area = disc_grid(R, pitch)
    pts = pts + spec.origin
    rho = np.linalg.norm(pts[:, :2] - spec.origin[:2], axis=1)
    # Chebyshev-like radial nodes cluster near the rim where psi varies fastest
    nodes = R * np.sin(0.5 * np.pi * np.linspace(0.0, 1.0, radial_samples))
    nodes = nodes[nodes < R * (1 - 1e-9)]
    psi_nodes, exit_nodes = optical_path_profile(spec, nodes, trace_step, d)
    psi = np.interp(rho, nodes, psi_nodes)
    # exit points lie on the focal spot; use the mean crossing for all patches
    exit_pt = exit_nodes.mean(axis=0)
    phase = psi - np.linalg.norm(exit_pt - pts, axis=1)
    dirs = (exit_pt - pts) / np.linalg.norm(exit_pt - pts, axis=1)[:, None]
    return PatchSet(pts, area, j0, phase, dirs)


def focal_point(spec: LensSpec, direction=(0.0, 0.0, 1.0), offset: float = 0.0) -> np.ndarray:
    """Nominal focus (antipodal surface point), shifted ``offset`` along the axis."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return spec.origin + (spec.radius_R + offset) * d


def fwhm(coords: np.ndarray, magnitude: np.ndarray) -> float:
    """Full width at half maximum of a single-peaked magnitude profile."""
    coords = np.asarray(coords, dtype=float)
    mag = np.asarray(magnitude, dtype=float)
    k = int(np.argmax(mag))
    half = mag[k] / 2
    left = k
    while left > 0 and mag[left] > half:
        left -= 1
    right = k
    while right < len(mag) - 1 and mag[right] > half:
        right += 1
    if mag[left] > half or mag[right] > half:
        raise DomainError("profile does not fall below half maximum inside the scan")

    def cross(i, j):
        return coords[i] + (half - mag[i]) * (coords[j] - coords[i]) / (mag[j] - mag[i])

    return float(cross(right - 1, right) - cross(left, left + 1))


def locate_focus(patches, wavelength: float, nominal, search=(-1.0, 0.5), step=None,
                 axis: str = "z") -> np.ndarray:
    """Point of maximum |E| along ``axis`` through ``nominal``.

    ``search`` bounds the grid in wavelengths relative to ``nominal``; low
    Fresnel-number apertures peak noticeably before the geometric focus.
    """
    step = wavelength / 100 if step is None else step
    lo, hi = search
    samples = field_scan(patches, axis, (lo * wavelength, hi * wavelength, step),
                         wavelength, through=nominal)
    mags = np.abs([s.amplitude for s in samples])
    return np.array(samples[int(np.argmax(mags))].position)


def beam_waist(patches, wavelength: float, focus, half_width=None, step=None,
               axis: str = "x"):
    """Intensity FWHM of a transverse scan through ``focus``.

    Returns ``(fwhm, samples)``.
    """
    half_width = 3 * wavelength if half_width is None else half_width
    step = wavelength / 400 if step is None else step
    samples = field_scan(patches, axis, (-half_width, half_width, step), wavelength,
                         through=focus)
    coords = np.array([s.position[AXES[axis]] for s in samples]) - focus[AXES[axis]]
    intensity = np.abs([s.amplitude for s in samples]) ** 2
    return fwhm(coords, intensity), samples


def airy_fwhm(wavelength: float, f_number: float) -> float:
    """Paraxial Airy intensity FWHM, 1.029 * wavelength * f/D."""
    return 1.029 * wavelength * f_number
