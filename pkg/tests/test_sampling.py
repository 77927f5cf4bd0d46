import numpy as np
import pytest
from scipy import stats

from pinnhpo.problem import manufactured
from pinnhpo.sampling import (
    level_size,
    make_collocation,
    neumann_boundary_count,
    points_per_dim,
    precision_of,
    sample_boundary,
    sample_domain,
    write_points_csv,
)


@pytest.mark.parametrize("r, omega, n", [(10, 2, 20), (30, 2, 60), (10, 1, 10), (2.5, 1, 3), (0.5, 1, 1)])
def test_points_per_dim(r, omega, n):
    assert points_per_dim(r, omega) == n


def test_paper_set_sizes():
    assert points_per_dim(10, 2) ** 2 == 400
    assert points_per_dim(30, 2) ** 2 == 3600


TABLE3 = {2: (5.0, 20.0, 80.0), 4: (2.5, 10.0, 40.0), 6: (1.7, 6.7, 26.7)}


@pytest.mark.parametrize("omega", sorted(TABLE3))
def test_precision_table(omega):
    got = tuple(precision_of(level_size(l)[0], omega) for l in (1, 3, 5))
    assert got == TABLE3[omega]


def test_level_size():
    assert [level_size(l) for l in (1, 3, 5)] == [(10, 100), (40, 1600), (160, 25600)]
    with pytest.raises(ValueError):
        level_size(2)


def test_neumann_boundary_count():
    assert neumann_boundary_count(2, 20) == 80
    assert neumann_boundary_count(3, 10) == 1200
    assert neumann_boundary_count(3, 10, "paper16") == 1600
    with pytest.raises(ValueError):
        neumann_boundary_count(2, 10, "paper16")


class TestDomain:
    def test_empty(self, rng):
        assert sample_domain(0, 2, rng).shape == (0, 2)

    def test_seeded(self):
        a = sample_domain(50, 3, np.random.default_rng(5))
        b = sample_domain(50, 3, np.random.default_rng(5))
        assert a.tobytes() == b.tobytes()

    def test_interior_and_mean(self, rng):
        pts = sample_domain(10**5, 2, rng)
        assert np.all((pts > 0) & (pts < 1))
        sigma = np.sqrt(1 / 12 / 10**5)
        assert np.all(np.abs(pts.mean(axis=0) - 0.5) <= 3 * sigma)


class TestBoundary:
    def test_one_coordinate_on_face(self, rng):
        for d in (2, 3):
            pts = sample_boundary(2000, d, rng).points
            on_face = (pts == 0.0) | (pts == 1.0)
            assert np.all(on_face.sum(axis=1) == 1)

    def test_edges_uniform(self, rng):
        pts = sample_boundary(40000, 2, rng).points
        counts = [np.sum(pts[:, a] == s) for a in (0, 1) for s in (0.0, 1.0)]
        assert sum(counts) == 40000
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_outward_normals(self, rng):
        bs = sample_boundary(3000, 3, rng)
        z0 = bs.points[:, 2] == 0.0
        assert z0.any()
        assert np.all(bs.normals[z0] == [0.0, 0.0, -1.0])
        # generically: x + 0.5 n moves outside the cube along the face axis
        axis = np.argmax(np.abs(bs.normals), axis=1)
        rows = np.arange(len(bs))
        assert np.all(np.abs(bs.normals[rows, axis]) == 1.0)
        assert np.all(bs.points[rows, axis] == (bs.normals[rows, axis] + 1) / 2)


class TestCollocation:
    def test_dirichlet_hard(self, rng):
        sets = make_collocation(manufactured("dirichlet2d", 2), rng)
        assert sets.train.domain.shape == (400, 2)
        assert sets.test.domain.shape == (3600, 2)
        assert len(sets.train.boundary) == 0 and len(sets.train.observations) == 0

    def test_dirichlet_soft(self, rng):
        sets = make_collocation(manufactured("dirichlet2d", 1, hard_constraint=None), rng)
        assert len(sets.train.boundary) == 40 and len(sets.test.boundary) == 120

    def test_level(self, rng):
        sets = make_collocation(manufactured("dirichlet2d", 4), rng, level=3)
        assert sets.train.domain.shape == (1600, 2)
        assert sets.test.domain.shape == (120**2, 2)

    def test_neumann_shares_sets(self, rng):
        sets = make_collocation(manufactured("neumann3d", 1), rng)
        assert sets.train is sets.test
        assert sets.train.domain.shape == (100, 3)
        assert len(sets.train.boundary) == 1200
        paper = make_collocation(manufactured("neumann3d", 1), rng, boundary_mode="paper16")
        assert len(paper.train.boundary) == 1600

    def test_seeded(self):
        spec = manufactured("dirichlet2d", 1)
        a = make_collocation(spec, np.random.default_rng(3))
        b = make_collocation(spec, np.random.default_rng(3))
        assert a.train.domain.tobytes() == b.train.domain.tobytes()
        assert a.test.domain.tobytes() == b.test.domain.tobytes()


def test_write_points_csv(tmp_path, rng):
    bs = sample_boundary(5, 2, rng)
    path = tmp_path / "pts.csv"
    write_points_csv(path, bs.points, bs.normals)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(rows[:, :2], bs.points)
    np.testing.assert_array_equal(rows[:, 2:], bs.normals)
    assert path.read_text().splitlines()[0] == "x,y,nx,ny"
