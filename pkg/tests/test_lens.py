import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grin_rydberg.errors import ConfigurationError, DomainError, UnrealizableIndexError
from grin_rydberg.lens import (LATTICE_HEADER, LensSpec, TabulatedMedium, VolumeAverageMedium,
                               b_from_fill, discretize_lens, export_stl, fill_fraction_for_index,
                               fill_from_b, lattice_csv, luneburg_index, read_stl)

R = 0.196


@pytest.fixture(scope="module")
def ref_lattice():
    return discretize_lens(LensSpec.reference_design())


def test_luneburg_index_examples():
    assert luneburg_index(0.0, R) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert luneburg_index(R, R) == 1.0
    # mpmath: sqrt(1.75) = 1.32287565553229529525
    assert luneburg_index(0.098, R) == pytest.approx(1.3228756555322953, rel=1e-14)
    assert luneburg_index(2 * R, R) == 1.0


@pytest.mark.parametrize("r, radius", [(-1e-3, R), (0.1, 0.0), (0.1, -1.0)])
def test_luneburg_index_domain(r, radius):
    with pytest.raises(DomainError):
        luneburg_index(r, radius)


def test_fill_fraction_examples():
    assert fill_fraction_for_index(1.0, 2.99) == 0.0
    assert fill_fraction_for_index(2.99, 2.99) == 1.0
    # mpmath: (2 - 1) / (2.99**2 - 1) = 0.125942998199015125754
    assert fill_fraction_for_index(math.sqrt(2), 2.99) == pytest.approx(0.12594299819901513, rel=1e-13)


def test_fill_fraction_matches_bisection_oracle():
    forward = VolumeAverageMedium(2.99).index_for_fill
    target = 1.4142136
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if forward(mid) < target:
            lo = mid
        else:
            hi = mid
    assert fill_fraction_for_index(target, 2.99) == pytest.approx(0.5 * (lo + hi), abs=1e-14)
    assert fill_fraction_for_index(target, 2.99) == pytest.approx(0.1259430, abs=5e-8)


@pytest.mark.parametrize("n", [0.99, 3.0, float("nan")])
def test_fill_fraction_unrealizable(n):
    with pytest.raises(UnrealizableIndexError):
        fill_fraction_for_index(n, 2.99)


def test_fill_fraction_monotone():
    n = np.linspace(1, 2.99, 500)
    assert np.all(np.diff(fill_fraction_for_index(n, 2.99)) > 0)


def test_b_from_fill_examples():
    c = 0.014
    assert b_from_fill(0.0, c) == 0.0
    assert b_from_fill(1.0, c) == pytest.approx(c, rel=1e-15)
    # mpmath: 14 * cbrt(0.1259430) = 7.0175586 mm
    assert b_from_fill(0.1259430, c) * 1e3 == pytest.approx(7.0175586, abs=1e-6)


@pytest.mark.parametrize("f, c", [(-0.01, 0.014), (1.01, 0.014), (0.5, 0.0)])
def test_b_from_fill_domain(f, c):
    with pytest.raises(DomainError):
        b_from_fill(f, c)


@settings(max_examples=200, deadline=None)
@given(f=st.floats(0.0, 1.0), c=st.floats(1e-4, 1.0))
def test_fill_round_trip(f, c):
    back = fill_from_b(b_from_fill(f, c), c)
    assert back == pytest.approx(f, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(u=st.floats(0.0, 1.0))
def test_luneburg_targets_always_realizable(u):
    f = fill_fraction_for_index(luneburg_index(u * R, R), 2.99)
    assert 0.0 <= f <= 0.126


def test_spec_invariants():
    spec = LensSpec()
    assert spec.wavelength == pytest.approx(299_792_458 / 3.5e9)
    assert LensSpec.reference_design().wavelength == 0.084
    with pytest.raises(ConfigurationError):
        LensSpec(radius_R=-1)
    with pytest.raises(ConfigurationError):
        LensSpec(cell_size_c=0.03)  # > lambda/4
    with pytest.raises(ConfigurationError):
        LensSpec(material_index_n=1.3)


def test_ref_lattice_counts(ref_lattice):
    # direct enumeration of candidate centres: 2R/c = 28 per axis
    count = sum(1 for _ in itertools.product(range(28), repeat=3))
    assert len(ref_lattice) == count == 21952
    assert ref_lattice.shape == (28, 28, 28)


def test_ref_lattice_cell_values(ref_lattice):
    lat = ref_lattice
    k = int(np.argmin(lat.radial_r))
    half_diag = 0.5 * 0.014 * math.sqrt(3)
    assert lat.radial_r[k] <= half_diag * (1 + 1e-12)
    assert lat.target_index[k] == pytest.approx(math.sqrt(2), abs=math.sqrt(2) - luneburg_index(half_diag, R) + 1e-12)
    outside = lat.radial_r > R
    assert np.all(lat.target_index[outside] == 1.0)
    assert np.all(lat.fill_b[outside] == 0.0)
    assert np.all((lat.target_index >= 1) & (lat.target_index <= 2.99))
    assert np.all((lat.fill_b >= 0) & (lat.fill_b <= 0.014))
    np.testing.assert_allclose(lat.fill_fraction, (lat.fill_b / 0.014) ** 3, rtol=1e-12, atol=1e-300)


def test_radial_monotonicity(ref_lattice):
    order = np.argsort(ref_lattice.radial_r, kind="stable")
    assert np.all(np.diff(ref_lattice.target_index[order]) <= 0)


def test_octant_partition(ref_lattice):
    labels = ref_lattice.octant_labels
    assert set(np.unique(labels)) == set(range(8))
    rel = ref_lattice.centers - ref_lattice.spec.origin
    expected = (rel[:, 0] < 0) * 1 + (rel[:, 1] < 0) * 2 + (rel[:, 2] < 0) * 4
    assert np.array_equal(labels, expected)
    assert sum(np.sum(labels == s) for s in range(8)) == len(ref_lattice)


def test_cube_symmetry_of_b_field(ref_lattice):
    grid = ref_lattice.b_grid()
    for perm in itertools.permutations(range(3)):
        for flips in itertools.product([False, True], repeat=3):
            g = np.transpose(grid, perm)
            for ax, flip in enumerate(flips):
                if flip:
                    g = np.flip(g, axis=ax)
            assert np.array_equal(g, grid)


def test_degenerate_single_cell_lens():
    c = 0.01
    lat = discretize_lens(LensSpec(radius_R=c / 2, cell_size_c=c, design_freq=1e9))
    assert len(lat) == 1
    assert lat.solid_mask.sum() == 1
    assert lat.target_index[0] == pytest.approx(math.sqrt(2))


def test_tabulated_medium_plugs_in():
    vol = VolumeAverageMedium(2.99)
    f = np.linspace(0, 1, 401)
    tab = TabulatedMedium(f, vol.index_for_fill(f))
    lat_tab = discretize_lens(LensSpec.reference_design(), medium=tab)
    lat_vol = discretize_lens(LensSpec.reference_design())
    np.testing.assert_allclose(lat_tab.fill_fraction, lat_vol.fill_fraction, atol=2e-4)
    with pytest.raises(UnrealizableIndexError):
        tab.fill_for_index(3.5)
    with pytest.raises(ConfigurationError):
        TabulatedMedium([0, 0.5, 0.4], [1, 2, 3])


def test_stl_single_cube():
    lat = discretize_lens(LensSpec(radius_R=0.005, cell_size_c=0.01, design_freq=1e9))
    data = export_stl(lat)
    assert len(data) == 84 + 12 * 50
    assert int.from_bytes(data[80:84], "little") == 12
    tris = read_stl(data)
    b_mm = lat.fill_b[0] * 1e3
    verts = tris["vertices"].reshape(-1, 3)
    np.testing.assert_allclose(verts.max(axis=0) - verts.min(axis=0), b_mm, rtol=1e-6)
    # outward normals: each face normal points away from the cube centre
    centroids = tris["vertices"].mean(axis=1)
    assert np.all(np.sum(centroids * tris["normal"], axis=1) > 0)
    # winding agrees with the stored normal
    e1 = tris["vertices"][:, 1] - tris["vertices"][:, 0]
    e2 = tris["vertices"][:, 2] - tris["vertices"][:, 0]
    assert np.all(np.sum(np.cross(e1, e2) * tris["normal"], axis=1) > 0)


def test_stl_segments_partition_full_mesh(ref_lattice):
    full = read_stl(export_stl(ref_lattice))
    parts = [read_stl(export_stl(ref_lattice, s)) for s in range(8)]
    assert len(full) == 12 * int(ref_lattice.solid_mask.sum())
    joined = np.concatenate(parts)
    assert len(joined) == len(full)
    key = lambda recs: sorted(r.tobytes() for r in recs)
    assert key(joined) == key(full)


def test_stl_empty_selection_warns():
    lat = discretize_lens(LensSpec(radius_R=0.005, cell_size_c=0.01, design_freq=1e9))
    with pytest.warns(UserWarning):
        data = export_stl(lat, segment=7)
    assert len(data) == 84
    assert int.from_bytes(data[80:84], "little") == 0
    with pytest.raises(DomainError):
        export_stl(lat, segment=8)


def test_lattice_csv_schema(ref_lattice):
    text = lattice_csv(ref_lattice)
    lines = text.splitlines()
    assert lines[0] == LATTICE_HEADER
    assert len(lines) == 1 + len(ref_lattice)
    row = lines[1 + int(np.argmax(ref_lattice.fill_b))].split(",")
    k = int(np.argmax(ref_lattice.fill_b))
    assert float(row[7]) == pytest.approx(ref_lattice.fill_b[k] * 1e3, rel=1e-8)
    assert float(row[6]) == pytest.approx(ref_lattice.target_index[k], rel=1e-8)
