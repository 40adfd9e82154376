"""Ray tracing through the continuous Luneburg profile.

Integrates the ray equation d/ds(n dr/ds) = grad n with arc length s as
the parameter, using classical fixed-step RK4 on the state
(r, p = n * dr/ds, psi). The optical path psi obeys dpsi/ds = n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InsufficientBundleError
from .lens import LensSpec

EXITED = "exited"
MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class Ray:
    position: np.ndarray
    direction: np.ndarray
    optical_path_psi: float = 0.0
    s: float = 0.0

    @classmethod
    def make(cls, position, direction, psi=0.0, s=0.0):
        d = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise DomainError("ray direction must be nonzero")
        return cls(np.asarray(position, dtype=float), d / norm, float(psi), float(s))


@dataclass
class Trajectory:
    samples: List[Ray] = field(default_factory=list)
    exit_state: Ray = None
    terminated: str = EXITED
    entered: bool = False

    def positions(self) -> np.ndarray:
        return np.array([r.position for r in self.samples])

    def to_csv(self) -> str:
        lines = [TRAJECTORY_HEADER]
        for r in self.samples:
            x, y, z = r.position
            dx, dy, dz = r.direction
            lines.append(f"{r.s:.9g},{x:.9g},{y:.9g},{z:.9g},"
                         f"{dx:.9g},{dy:.9g},{dz:.9g},{r.optical_path_psi:.9g}")
        return "\n".join(lines) + "\n"


TRAJECTORY_HEADER = "s_m,x_m,y_m,z_m,dx,dy,dz,psi_m"


def _n_and_grad(rel, R):
    """Interior Luneburg index and its gradient at offset ``rel`` from centre.

    The interior formula is used even marginally outside R so the final
    step across the surface stays smooth; the exit root-find trims it.
    """
    r2 = rel @ rel
    n = math.sqrt(max(2.0 - r2 / (R * R), 1e-300))
    return n, rel * (-1.0 / (R * R * n))


def _deriv(rel, p, R):
    n, g = _n_and_grad(rel, R)
    return p / n, g, n


def _rk4_step(rel, p, psi, h, R):
    k1r, k1p, n1 = _deriv(rel, p, R)
    k2r, k2p, n2 = _deriv(rel + 0.5 * h * k1r, p + 0.5 * h * k1p, R)
    k3r, k3p, n3 = _deriv(rel + 0.5 * h * k2r, p + 0.5 * h * k2p, R)
    k4r, k4p, n4 = _deriv(rel + h * k3r, p + h * k3p, R)
    rel_new = rel + h / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    p_new = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    psi_new = psi + h / 6.0 * (n1 + 2 * n2 + 2 * n3 + n4)
    return rel_new, p_new, psi_new


def _renormalize(rel, p, R):
    n, _ = _n_and_grad(rel, R)
    d = p / np.linalg.norm(p)
    return d * n, d


def _sphere_entry(pos, d, R):
    """Distance along d to the first sphere crossing, or None if missed.

    Tangent rays (zero chord) count as misses.
    """
    b = pos @ d
    c = pos @ pos - R * R
    if c <= 0:
        return 0.0
    disc = b * b - c
    if disc <= 1e-15 * R * R:
        return None
    t = -b - math.sqrt(disc)
    return t if t >= 0 else None


def trace_ray(start: Ray, spec: LensSpec, step: float, max_steps: int = 1_000_000,
              exit_extension: float = 0.0) -> Trajectory:
    """Trace one ray through the lens of ``spec``.

    The start must lie on or outside the sphere. Free-space legs are taken
    in a single straight segment; inside, RK4 steps of ``step`` are taken
    until the ray leaves the sphere, and the last step is shortened so the
    exit sample lies on the surface. ``exit_extension`` appends a final
    straight-line sample that far beyond the exit point.
    """
    if not step > 0:
        raise DomainError(f"step must be positive, got {step}")
    R = spec.radius_R
    origin = spec.origin
    pos = np.asarray(start.position, dtype=float)
    d = np.asarray(start.direction, dtype=float)
    d = d / np.linalg.norm(d)
    psi = start.optical_path_psi
    s = start.s
    rel = pos - origin
    if rel @ rel < R * R * (1 - 1e-12):
        raise DomainError("ray must start on or outside the lens sphere")

    traj = Trajectory(samples=[Ray(pos.copy(), d.copy(), psi, s)])
    t_entry = _sphere_entry(rel, d, R)
    if t_entry is None:
        # missed: a single straight segment
        length = exit_extension if exit_extension > 0 else 2 * R
        end = Ray(pos + length * d, d.copy(), psi + length, s + length)
        traj.samples.append(end)
        traj.exit_state = end
        return traj

    traj.entered = True
    if t_entry > 0:
        rel = rel + t_entry * d
        # put the entry point exactly on the sphere
        rel *= R / math.sqrt(rel @ rel)
        psi += t_entry
        s += t_entry
        traj.samples.append(Ray(origin + rel, d.copy(), psi, s))

    p = d * 1.0  # n = 1 on the surface
    R2 = R * R
    for _ in range(max_steps):
        rel_new, p_new, psi_new = _rk4_step(rel, p, psi, step, R)
        if rel_new @ rel_new >= R2:
            h = _exit_fraction(rel, p, psi, step, R)
            rel, p, psi = _rk4_step(rel, p, psi, h, R)
            rel *= R / math.sqrt(rel @ rel)
            s += h
            p, d = _renormalize(rel, p, R)
            traj.samples.append(Ray(origin + rel, d, psi, s))
            break
        rel, p, psi = rel_new, p_new, psi_new
        s += step
        p, d = _renormalize(rel, p, R)
        traj.samples.append(Ray(origin + rel, d, psi, s))
    else:
        traj.terminated = MAX_STEPS
        traj.exit_state = traj.samples[-1]
        return traj

    exit_ray = traj.samples[-1]
    traj.exit_state = exit_ray
    if exit_extension > 0:
        traj.samples.append(Ray(exit_ray.position + exit_extension * exit_ray.direction,
                                exit_ray.direction, psi + exit_extension,
                                s + exit_extension))
    return traj


def _exit_fraction(rel, p, psi, step, R):
    """Step length in (0, step] that lands the RK4 update on the sphere."""
    R2 = R * R

    def excess(h):
        r_new, _, _ = _rk4_step(rel, p, psi, h, R)
        return r_new @ r_new - R2

    lo = 0.0
    if excess(lo) >= 0:
        # starting on the surface (grazing entry): find an interior point first
        lo = step
        for _ in range(60):
            lo *= 0.5
            if excess(lo) < 0:
                break
        else:
            return step
    return brentq(excess, lo, step, xtol=1e-15 * R, rtol=4 * np.finfo(float).eps)


def parallel_ray(offset: Sequence[float] | float, direction, spec: LensSpec,
                 clearance: float = 0.0) -> Ray:
    """Ray of a plane wave travelling along ``direction``.

    ``offset`` is a scalar (displacement along a fixed perpendicular) or a
    3-vector perpendicular to ``direction``. The ray starts on the plane
    tangent to the sphere at its incident pole (moved back by
    ``clearance``), with psi = 0 on that plane.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if np.ndim(offset) == 0:
        offset = float(offset) * perpendicular(d)
    else:
        offset = np.asarray(offset, dtype=float)
        offset = offset - (offset @ d) * d
    R = spec.radius_R
    pos = spec.origin - (R + clearance) * d + offset
    return Ray(pos, d, 0.0, 0.0)


def perpendicular(d: np.ndarray) -> np.ndarray:
    """A fixed unit vector perpendicular to d (x-axis preferred)."""
    trial = np.array([1.0, 0.0, 0.0])
    if abs(trial @ d) > 0.9:
        trial = np.array([0.0, 1.0, 0.0])
    v = trial - (trial @ d) * d
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class BundleFocus:
    focus_point: np.ndarray
    rms_spread: float
    crossings: np.ndarray
    focused: bool


def focus_parallel_bundle(direction, offsets: Sequence[float], spec: LensSpec,
                          step: float) -> BundleFocus:
    """Trace a plane-wave bundle and locate where it leaves the sphere.

    Returns the centroid of the exit crossings and their RMS distance from
    it. Offsets are meant to lie inside (-R, R); rays that miss the lens
    are carried as straight lines to the plane through the antipodal point.
    ``focused`` is False when the spread exceeds R.
    """
    offsets = list(offsets)
    if len(offsets) < 3:
        raise InsufficientBundleError(
            f"a focus estimate needs at least 3 rays, got {len(offsets)}")
    R = spec.radius_R
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    crossings = []
    for off in offsets:
        traj = trace_ray(parallel_ray(off, d, spec), spec, step)
        if traj.entered:
            crossings.append(traj.exit_state.position)
        else:
            crossings.append(_far_plane_crossing(traj.exit_state, d, spec))
    pts = np.array(crossings)
    centroid = pts.mean(axis=0)
    rms = float(np.sqrt(np.mean(np.sum((pts - centroid) ** 2, axis=1))))
    return BundleFocus(centroid, rms, pts, rms <= R)


def _far_plane_crossing(ray: Ray, d, spec):
    # straight ray: report where it crosses the plane through the antipode
    target = spec.origin + spec.radius_R * d
    t = (target - ray.position) @ d / (ray.direction @ d)
    return ray.position + t * ray.direction


def optical_path_profile(spec: LensSpec, radii: Sequence[float], step: float,
                         direction=(0.0, 0.0, 1.0)):
    """Optical path to the exit crossing for rays at each radial offset.

    Returns ``(psi, exit_points)``; rays are started on the incident
    tangent plane (psi = 0 there).
    """
    d = np.asarray(direction, dtype=float)
    psis, exits = [], []
    for rho in radii:
        traj = trace_ray(parallel_ray(rho, d, spec), spec, step)
        psis.append(traj.exit_state.optical_path_psi)
        exits.append(traj.exit_state.position)
    return np.array(psis), np.array(exits)
