import math

import numpy as np
import pytest
from scipy.integrate import quad

from grin_rydberg.errors import DomainError, InsufficientBundleError
from grin_rydberg.lens import LensSpec
from grin_rydberg.raytrace import (TRAJECTORY_HEADER, Ray, focus_parallel_bundle,
                                   parallel_ray, trace_ray)

Z = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="module")
def unit_lens():
    return LensSpec(radius_R=1.0, design_freq=1e8, cell_size_c=0.1)


def axial_path(spec, step):
    traj = trace_ray(parallel_ray(0.0, Z, spec), spec, step)
    return traj.exit_state.optical_path_psi


def test_axial_optical_path_matches_quadrature(unit_lens):
    oracle, _ = quad(lambda u: math.sqrt(2 - u * u), -1, 1, epsabs=1e-14)
    assert oracle == pytest.approx(1 + math.pi / 2, rel=1e-14)
    traj = trace_ray(parallel_ray(0.0, Z, unit_lens), unit_lens, 1e-3)
    assert traj.exit_state.optical_path_psi == pytest.approx(oracle, rel=1e-10)
    np.testing.assert_allclose(traj.positions()[:, :2], 0.0, atol=1e-15)
    np.testing.assert_allclose(traj.exit_state.position, [0, 0, 1], atol=1e-12)


def test_tangent_ray_is_undeviated(unit_lens):
    traj = trace_ray(parallel_ray(1.0, Z, unit_lens), unit_lens, 1e-3)
    assert not traj.entered
    np.testing.assert_allclose(traj.exit_state.direction, Z)
    assert traj.exit_state.position[0] == 1.0


def test_missed_ray_is_straight(unit_lens):
    start = Ray.make([2.0, 0.0, -2.0], [0, 0, 1])
    traj = trace_ray(start, unit_lens, 1e-2)
    assert traj.terminated == "exited"
    np.testing.assert_allclose(traj.exit_state.direction, [0, 0, 1])


def test_off_axis_ray_hits_antipode(unit_lens):
    traj = trace_ray(parallel_ray(0.5, Z, unit_lens), unit_lens, 1e-3)
    assert np.linalg.norm(traj.exit_state.position - Z) < 1e-3


def test_step_domain(unit_lens):
    with pytest.raises(DomainError):
        trace_ray(parallel_ray(0.0, Z, unit_lens), unit_lens, 0.0)
    with pytest.raises(DomainError):
        trace_ray(Ray.make([0, 0, 0], [0, 0, 1]), unit_lens, 1e-2)


def test_direction_stays_unit_and_psi_grows(unit_lens):
    traj = trace_ray(parallel_ray(0.7, Z, unit_lens), unit_lens, 1e-2)
    dirs = np.array([r.direction for r in traj.samples])
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-9)
    psi = np.array([r.optical_path_psi for r in traj.samples])
    assert np.all(np.diff(psi) >= 0)


def test_sample_spacing_bounded_by_step(unit_lens):
    step = 2e-2
    traj = trace_ray(parallel_ray(0.3, Z, unit_lens), unit_lens, step)
    pts = traj.positions()[1:]  # first leg is the free-space approach
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    assert np.all(gaps <= step * (1 + 1e-6))


def test_fourth_order_convergence(unit_lens):
    steps = [0.1, 0.05, 0.025, 0.0125]
    psis = [trace_ray(parallel_ray(0.5, Z, unit_lens), unit_lens, h).exit_state.optical_path_psi
            for h in steps]
    diffs = np.abs(np.diff(psis))
    ratios = diffs[:-1] / diffs[1:]
    # 2**4 = 16 for a fourth-order scheme
    assert np.all(ratios > 12) and np.all(ratios < 20)


def test_mirror_symmetry(unit_lens):
    a = trace_ray(parallel_ray(0.37, Z, unit_lens), unit_lens, 5e-3).exit_state.position
    b = trace_ray(parallel_ray(-0.37, Z, unit_lens), unit_lens, 5e-3).exit_state.position
    np.testing.assert_allclose(b, a * [-1, 1, 1], atol=1e-9)


def test_focus_bundle_to_09R(unit_lens):
    offsets = [k / 10 for k in range(-9, 10)]
    res = focus_parallel_bundle(Z, offsets, unit_lens, 1e-3)
    rms = math.sqrt(np.mean(np.sum((res.crossings - Z) ** 2, axis=1)))
    assert rms <= 1e-3
    assert res.focused


def test_focus_bundle_oblique_direction():
    spec = LensSpec(radius_R=0.196, cell_size_c=0.014, lattice_origin=(0.01, -0.02, 0.03))
    d = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    res = focus_parallel_bundle(d, [-0.1, 0.0, 0.05, 0.1], spec, 1e-3 * 0.196)
    np.testing.assert_allclose(res.focus_point, spec.origin + 0.196 * d, atol=1e-6)


def test_single_axis_ray_focus_on_axis(unit_lens):
    res = focus_parallel_bundle(Z, [0.0, 0.0, 0.0], unit_lens, 1e-2)
    np.testing.assert_allclose(res.focus_point, Z, atol=1e-15)


def test_bundle_needs_three_rays(unit_lens):
    with pytest.raises(InsufficientBundleError):
        focus_parallel_bundle(Z, [0.0, 0.1], unit_lens, 1e-2)


def test_vanishing_lens_does_not_focus():
    tiny = LensSpec(radius_R=1e-6, design_freq=1e8, cell_size_c=1e-7)
    res = focus_parallel_bundle(Z, [-0.5, -0.2, 0.0, 0.2, 0.5], tiny, 1e-8)
    assert res.rms_spread > tiny.radius_R
    assert not res.focused


def test_trajectory_csv(unit_lens):
    traj = trace_ray(parallel_ray(0.2, Z, unit_lens), unit_lens, 0.05)
    lines = traj.to_csv().splitlines()
    assert lines[0] == TRAJECTORY_HEADER
    assert len(lines) == len(traj.samples) + 1
    last = [float(v) for v in lines[-1].split(",")]
    assert last[7] == pytest.approx(traj.exit_state.optical_path_psi, rel=1e-8)
