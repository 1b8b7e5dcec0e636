import io
import math

import numpy as np
import pytest
from scipy import stats

from bmcx import domains as D
from bmcx import engine as E
from bmcx.errors import NumericFailure, StartAtOrigin, StartOutsideDomain
from bmcx.green import green_disk, green_winding
from bmcx.series import poisson_integral


def cfg(n, seed=0, **kw):
    return E.SimConfig(seed=seed, n_paths=n, **kw)


def test_increment_moments():
    x = E.sample_increment(1.0, seed=3, path=0, count=10**6)
    re = x.real
    n = re.size
    assert abs(re.mean()) < 4 / math.sqrt(n)
    assert abs(np.mean(re**2) - 1) < 4 * math.sqrt(2 / n)
    assert abs(np.mean(re**4) - 3) < 4 * math.sqrt(96 / n)
    assert abs(np.mean(x.real * x.imag)) < 4 / math.sqrt(n)


def test_increment_scale_and_rotation_invariance():
    x = E.sample_increment(0.25, seed=4, path=9, count=200_000)
    assert abs(np.var(x.real) - 0.25) < 0.01
    rotated = x * np.exp(0.9j)
    ks = stats.ks_2samp(np.abs(x), np.abs(rotated)).statistic
    assert ks < 2 / math.sqrt(x.size)
    # the rotated real part has the same law as the original one
    assert stats.ks_2samp(x.real, rotated.real).statistic < 2 / math.sqrt(x.size / 2)


def test_increments_are_a_pure_function_of_the_stream():
    a = E.sample_increment(1.0, 5, 17, 100)
    assert np.array_equal(a, E.sample_increment(1.0, 5, 17, 100))
    assert not np.array_equal(a, E.sample_increment(1.0, 5, 18, 100))
    with pytest.raises(ValueError):
        E.sample_increment(0.0, 5, 0)


def test_disk_exit_time():
    _, est = E.run_exit(D.Disk(), 0, cfg(20_000, seed=1))
    assert est.within(0.5, 3)
    assert est.censored == 0 and est.count == 20_000


def test_annulus_and_strip_hitting_laws():
    batch, _ = E.run_exit(D.Annulus(1, 4), 2, cfg(20_000, seed=2))
    inner = E.EstimatorResult.from_samples(np.abs(batch.exit_points) < 2)
    assert inner.within(0.5, 3)
    batch, _ = E.run_exit(D.Strip(0, 1), 0.3, cfg(20_000, seed=3))
    left = E.EstimatorResult.from_samples(batch.exit_points.real < 0.5)
    assert left.within(0.7, 3)


def test_exit_points_lie_on_boundary():
    for dom, start in ((D.Disk(), 0.3j), (D.EquilateralTriangle(), 0.1), (D.Cardioid(), 1.0)):
        batch, _ = E.run_exit(dom, start, cfg(500, seed=4))
        bd = dom.nearest_boundary(batch.exit_points) if not isinstance(dom, D.Cardioid) else None
        if bd is not None:
            assert np.max(np.abs(bd - batch.exit_points)) < 1e-9
        assert np.all(batch.exit_times > 0)


def test_harmonic_measure_from_center_is_uniform():
    est = E.harmonic_measure_mc(D.Disk(), 0, E.Partition.arcs(12), cfg(24_000, seed=5))
    assert np.all(np.abs(est.mean - 1 / 12) <= 4 * est.stderr)


def test_harmonic_measure_matches_poisson():
    est = E.harmonic_measure_mc(D.Disk(), 0.5, E.Partition.arcs(12), cfg(24_000, seed=6))
    edges = est.histogram[0]
    for k in range(12):
        arc = lambda t, lo=edges[k], hi=edges[k + 1]: ((t >= lo) & (t < hi)).astype(float)
        p = poisson_integral(arc, 0.5, m=1 << 15)
        assert abs(est.mean[k] - p) <= 4 * math.sqrt(p * (1 - p) / est.count)


def test_halfplane_cauchy_fraction():
    part = E.Partition.intervals([-np.inf, -1, 1, np.inf])
    est = E.harmonic_measure_mc(D.HalfPlane(), 1j, part, cfg(20_000, seed=7))
    assert abs(est.mean[1] - 0.5) <= 3 * est.stderr[1]


def test_dirichlet_examples():
    one = E.dirichlet_solve(D.Disk(), 0.3, lambda z: np.ones(len(z)), cfg(2000, seed=8))
    assert one.mean == 1.0 and one.stderr == 0.0
    cos = E.dirichlet_solve(D.Disk(), 0.5, lambda z: np.cos(np.angle(z)), cfg(20_000, seed=9))
    assert cos.within(0.5, 3)
    ray = E.dirichlet_solve(D.Wedge(0, math.pi / 2), np.exp(1j * math.pi / 4),
                            lambda z: (np.abs(np.imag(z)) < np.abs(np.real(z))).astype(float), cfg(20_000, seed=10))
    assert ray.within(0.5, 3)


def test_start_outside_raises():
    with pytest.raises(StartOutsideDomain):
        E.run_exit(D.Disk(), 2, cfg(10))
    with pytest.raises(StartOutsideDomain):
        E.walk_on_spheres(D.Disk(), 2, cfg(10))


def test_walk_on_spheres_from_center_is_uniform():
    pts = E.walk_on_spheres(D.Disk(), 0, cfg(12_000, seed=11))
    counts = np.bincount(E.Partition.arcs(12).assign(pts), minlength=12)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_walk_on_spheres_matches_poisson_and_cauchy():
    pts = E.walk_on_spheres(D.Disk(), 0.5, cfg(24_000, seed=12))
    est = E.histogram_estimate(pts, E.Partition.arcs(12))
    edges = est.histogram[0]
    for k in range(12):
        arc = lambda t, lo=edges[k], hi=edges[k + 1]: ((t >= lo) & (t < hi)).astype(float)
        p = poisson_integral(arc, 0.5, m=1 << 15)
        assert abs(est.mean[k] - p) <= 4 * math.sqrt(p * (1 - p) / est.count)
    edges = np.tan(np.pi * (np.arange(11) / 10 - 0.5))
    hp = E.walk_on_spheres(D.HalfPlane(), 1j, cfg(20_000, seed=13, max_steps=100_000))
    est = E.histogram_estimate(hp, E.Partition.intervals(edges))
    assert np.all(np.abs(est.mean - 0.1) <= 4 * np.sqrt(0.09 / est.count))


def test_winding_symmetry():
    batch = E.winding_time(1, 1, cfg(4000, seed=14))
    ok = batch.stopped
    assert np.all(np.abs(np.abs(batch.winding[ok]) - 2 * np.pi) < 1e-9)
    plus = E.EstimatorResult.from_samples(batch.winding[ok] > 0)
    assert plus.within(0.5, 4)


def test_winding_occupation_near_minus_one():
    grid = E.Grid.cell_at(-1 + 0j, 0.2)
    batch = E.winding_time(1, 1, cfg(40_000, seed=15), grid=grid)
    dens = E.occupation_density(batch, grid)
    assert abs(dens.density[0, 0] / green_winding(1, -1) - 1) < 0.15


def test_winding_start_at_mark():
    with pytest.raises(StartAtOrigin):
        E.winding_time(1, 0, cfg(10))


def test_spitzer_median():
    T = 1e3
    batch = E.winding_at_horizon(T, 1, cfg(2000, seed=16, dt_max=np.inf))
    # paths that graze the mark take tiny steps and may be censored
    assert batch.n_censored <= 2
    s = 2 * batch.winding[batch.status == E.HORIZON] / math.log(T)
    n = s.size
    below = np.count_nonzero(s < 0)
    # the median is 0 iff about half the sample lies below it
    assert abs(below - n / 2) <= 4 * math.sqrt(n) / 2


def test_time_change_examples():
    base = D.Disk()
    c = 1.5 - 0.5j
    batch = E.simulate(base, 0, cfg(2000, seed=17), integrand=E.modulus_squared_of(lambda z: c + 0 * z))
    np.testing.assert_allclose(batch.integral, abs(c) ** 2 * batch.exit_times, rtol=1e-12)
    ident = E.simulate(base, 0, cfg(2000, seed=17), integrand=E.modulus_squared_of(lambda z: 1 + 0 * z))
    np.testing.assert_allclose(ident.integral, ident.exit_times, rtol=1e-12)
    est = E.time_change_along_path(base, 0, lambda z: 2 * (1 + z), cfg(20_000, seed=18))
    assert est.within(2.5, 3)


def test_occupation_disk_cell_and_boundary_cells():
    grid = E.Grid.covering(-1 + -1j, 1 + 1j, 10, 10)
    occ = E.occupation_grid(D.Disk(), 0, grid, cfg(20_000, seed=19))
    centers = grid.centers()
    inner = np.abs(centers) < 0.6
    peak = occ.density.max()
    corner = np.abs(centers) > 1.2
    assert np.all(occ.density[corner] == 0)
    rel = occ.density[inner] / green_disk(0, centers[inner]) - 1
    assert np.median(np.abs(rel)) < 0.15
    near = (np.abs(centers) > 0.85) & (np.abs(centers) < 1.2)
    assert np.all(occ.density[near] < 0.2 * peak)


def test_occupation_grows_with_horizon():
    # free motion spends ever more time in a fixed disk
    ind = E.disk_indicator(0.5 + 0j, 0.5)
    means = []
    for T in (10.0, 40.0, 160.0):
        b = E.simulate(D.Plane(), 0, cfg(2000, seed=20, dt_max=1e-2), horizon=T, integrand=ind,
                       roi=[0.0, 1.0, -0.5, 0.5])
        means.append(b.estimate(b.integral))
    for a, b in zip(means, means[1:]):
        assert b.mean - a.mean > 3 * math.hypot(a.stderr, b.stderr)


def test_dynkin_identities():
    sq = E.dynkin_check(lambda z: np.abs(z) ** 2, lambda z: 4.0, D.Disk(), 0, cfg(10_000, seed=21))
    assert sq.within(0, 3)
    re = E.dynkin_check(np.real, lambda z: 0.0, D.EquilateralTriangle(), 0.1 + 0.1j, cfg(10_000, seed=22))
    assert re.within(0, 3)


def test_dynkin_negative_control_drifts_to_level():
    res = E.dynkin_negative_control(horizons=(300, 3000, 30000), config=E.SimConfig(seed=23, n_paths=1000, dt_max=1e-2))
    m = [r.mean for r in res]
    assert m[0] > m[1] > m[2] > -1
    assert m[2] < -0.5


def test_burkholder_chain():
    r = E.burkholder_check(D.Disk(), 0, cfg(10_000, seed=24))
    assert abs(r.lhs.mean - 1) < 1e-2 and abs(r.mid.mean - 1) < 1e-2
    assert r.holds(3)
    assert E.burkholder_check(D.Disk(), 0.5, cfg(10_000, seed=25)).holds(3)
    assert E.burkholder_check(D.Strip(), 0, cfg(10_000, seed=26)).holds(3)


def test_discretization_consistency():
    coarse = E.run_exit(D.Disk(), 0, cfg(20_000, seed=27))[1]
    fine = E.run_exit(D.Disk(), 0, cfg(20_000, seed=28, dt_max=5e-4, boundary_tol=5e-5))[1]
    assert abs(coarse.mean - fine.mean) < 2 * math.hypot(coarse.stderr, fine.stderr) + 1e-3


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_exit_time_scales_as_r_squared(r):
    est = E.run_exit(D.Disk(0, r), 0, cfg(10_000, seed=29, dt_max=1e-3 * r * r))[1]
    assert est.within(r * r / 2, 3)


def test_determinism_and_path_independence():
    c = cfg(600, seed=30)
    a = E.simulate(D.Disk(), 0.2, c)
    b = E.simulate(D.Disk(), 0.2, c)
    buf_a, buf_b = io.StringIO(), io.StringIO()
    a.to_csv(buf_a)
    b.to_csv(buf_b)
    assert buf_a.getvalue() == buf_b.getvalue()
    assert buf_a.getvalue().splitlines()[0] == "path_id,exit_x,exit_y,exit_time,winding,sup_abs"
    # a path's output depends only on (seed, path index)
    tail = E.simulate(D.Disk(), 0.2, cfg(100, seed=30), first_path=500)
    assert np.array_equal(tail.exit_times, a.exit_times[500:])
    assert np.array_equal(tail.exit_points, a.exit_points[500:])


def test_censoring_is_counted():
    batch = E.simulate(D.HalfPlane(-1.0), 0, cfg(500, seed=31, dt_max=1e-2, max_steps=50), roi=False)
    assert batch.n_censored > 0
    est = batch.time_estimate()
    assert est.censored == batch.n_censored and est.count == 500 - batch.n_censored
    with pytest.raises(NumericFailure):
        E.simulate(D.HalfPlane(-10.0), 0, cfg(50, seed=31, dt_max=1e-4, max_steps=5), roi=False).time_estimate()


def test_config_validation():
    with pytest.raises(ValueError):
        E.SimConfig(n_paths=0)
    with pytest.raises(ValueError):
        E.SimConfig(step_factor=2)
    with pytest.raises(ValueError):
        E.SimConfig(boundary_tol=0.1).resolve(D.Disk(0, 1))
    assert E.SimConfig().resolve(D.Disk(0, 1)).boundary_tol == pytest.approx(2e-4)
