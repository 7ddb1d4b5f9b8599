import math
from fractions import Fraction

import mpmath
import pytest

from cuspflow.contfrac import PrecisionReal, cf_expand, convergent_pairs
from cuspflow.excursions import (
    ExcursionRecord,
    TrajectoryConfig,
    complete_records,
    enumerate_excursions,
    filter_excursions,
    sample_theta,
    twist_count,
    xi_prime,
)
from cuspflow.hyperbolic import (
    Horoball,
    UhpPoint,
    UnboundedExcursionError,
    geodesic_ray,
    intersect,
)
from cuspflow.origami import TORUS, cylinder_decomposition, epsilon0, parse_origami
from cuspflow.scalar import INFINITY

L_ORIGAMI = parse_origami("3; (1 2); (1 3)")


def cf_value(coeffs):
    """Fraction with the given continued fraction expansion [0; a1, a2...]."""
    val = Fraction(0)
    for a in reversed(coeffs):
        val = Fraction(1, a + val)
    return val


# ---------------------------------------------------------------------------
# xi_prime and twist_count


def test_xi_prime_two():
    assert xi_prime(2.0) == pytest.approx(math.sqrt(3) / 4)
    assert xi_prime(2.0) == pytest.approx(0.43301, abs=1e-5)


def test_xi_prime_limits():
    assert xi_prime(1.0000001) < 1e-3
    assert xi_prime(1e9) == pytest.approx(0.5, abs=1e-9)
    vals = [xi_prime(x) for x in (1.1, 1.5, 2.0, 4.0, 16.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_xi_prime_rejects_xi_at_most_one():
    with pytest.raises(ValueError):
        xi_prime(1.0)


def test_twist_count_vanishes_at_cone_edge():
    assert twist_count(1.0, 0.1, 0.1, 0.1) == 0.0


def test_twist_count_value_against_high_precision_oracle():
    # independent evaluation of the closed form at 60 digits
    with mpmath.mp.workdps(60):
        s1, s2 = mpmath.sin(mpmath.mpf("0.02")), mpmath.sin(mpmath.mpf("0.1"))
        oracle = (2 / mpmath.mpf("0.1")) * (s2 / s1) * mpmath.sqrt(1 - s1**2 / s2**2)
    val = twist_count(1.0, 0.1, 0.02, 0.1)
    assert val == pytest.approx(float(oracle), rel=1e-12)
    assert val == pytest.approx(97.816359, abs=1e-5)


def test_twist_count_domain_errors():
    with pytest.raises(ValueError):
        twist_count(1.0, 0.1, 0.2, 0.1)
    with pytest.raises(UnboundedExcursionError):
        twist_count(1.0, 0.1, 0.0, 0.1)


def test_twist_count_angle_ratio_sandwich():
    # deep in the cone the formula sits between the angle-ratio bounds
    xi = 2.0
    for phi_max in (0.05, 0.2, 0.6):
        for frac in (0.01, 0.1, 0.3):
            phi = frac * xi_prime(xi) * phi_max
            val = twist_count(1.0, 0.1, phi, phi_max)
            lo = (2 * 1.0 / (0.1 * xi)) * (phi_max / phi)
            hi = (2 * 1.0 * xi / 0.1) * (phi_max / phi)
            assert lo < val < hi


# ---------------------------------------------------------------------------
# enumerate_excursions


def test_golden_mean_visits_fibonacci_and_stays_thick():
    # the golden ray is maximally badly approximable: below the structural
    # bound it never enters a single horoball, while the walk's path is
    # exactly the Fibonacci convergents
    with mpmath.mp.workprec(2048):
        golden = (mpmath.sqrt(5) - 1) / 2
        theta = PrecisionReal.from_mpf(golden).value
    cfg = TrajectoryConfig(surface=TORUS, T=40.0, theta=theta, eps=0.25)
    result = enumerate_excursions(cfg)
    assert result.records == []
    assert set(result.coefficients[:40]) == {1}


def test_large_coefficient_directions_are_entered_at_convergents():
    coeffs = [1, 25, 2, 40, 1, 1, 60, 3, 90]
    theta = cf_value(coeffs)
    cfg = TrajectoryConfig(surface=TORUS, T=30.0, theta=theta, eps=0.25)
    result = enumerate_excursions(cfg)
    assert result.rational_terminal
    assert result.coefficients == tuple(coeffs)
    hits = {(r.p, r.q) for r in result.records if r.complete}
    convergents = set(convergent_pairs(coeffs))
    assert hits, "expected excursions at the large coefficients"
    assert hits <= convergents
    # the deep hits sit right before the large coefficients
    deep = {(r.p, r.q) for r in result.records if r.E > 4}
    expected_deep = set(list(convergent_pairs(coeffs))[:: 1][0:0])  # placeholder
    assert deep <= convergents


def test_rational_theta_terminates_with_partial_record():
    cfg = TrajectoryConfig(surface=TORUS, T=25.0, theta=Fraction(5, 13), eps=0.25)
    result = enumerate_excursions(cfg)
    assert result.rational_terminal
    last = result.records[-1]
    assert last.t_exit == INFINITY and not last.complete
    assert (last.p, last.q) == (5, 13)
    assert all(r.complete for r in result.records[:-1])


def test_walk_coefficients_match_gauss_expansion():
    import random

    rng = random.Random(42)
    for _ in range(5):
        theta = sample_theta(4096, rng)
        cfg = TrajectoryConfig(surface=TORUS, T=18.0, theta=theta, eps=0.25)
        result = enumerate_excursions(cfg)
        oracle = cf_expand(PrecisionReal(theta.numerator, theta.denominator, None), 60)
        k = min(len(result.coefficients), 40)
        assert result.coefficients[:k] == oracle.coeffs[:k]


def test_records_sorted_and_times_positive():
    cfg = TrajectoryConfig(surface=TORUS, T=200.0, seed=7)
    result = enumerate_excursions(cfg)
    times = [r.t_entry for r in result.records]
    assert times == sorted(times)
    assert all(0 <= r.t_entry < 200.0 for r in result.records)
    for r in result.records:
        if r.complete:
            assert r.t_exit > r.t_entry
            assert 0 < r.phi < r.phi_max < math.pi
            assert r.E_area == r.weight * r.E


def test_torus_excursion_intervals_disjoint():
    # Ford interiors are disjoint at eps <= 1, so excursion intervals into
    # distinct horoballs cannot overlap
    for seed in (1, 2, 3):
        result = enumerate_excursions(TrajectoryConfig(surface=TORUS, T=300.0, seed=seed))
        assert result.overlap_pairs == 0
        assert result.base_inside_clamps == 0


def test_l_origami_same_tangency_records_nest():
    # two cylinders in one direction give concentric horoballs; when the
    # small one is entered the big one is too, and the intervals nest
    cfg = TrajectoryConfig(surface=L_ORIGAMI, T=400.0, seed=11)
    result = enumerate_excursions(cfg)
    by_tangency = {}
    for r in result.records:
        if r.complete:
            by_tangency.setdefault((r.p, r.q), []).append(r)
    nested = [v for v in by_tangency.values() if len(v) > 1]
    for group in nested:
        group.sort(key=lambda r: r.t_entry)
        outer, inner = group[0], group[1]
        assert outer.t_entry <= inner.t_entry <= inner.t_exit <= outer.t_exit + 1e-9


def test_determinism_same_seed():
    a = enumerate_excursions(TrajectoryConfig(surface=TORUS, T=150.0, seed=5))
    b = enumerate_excursions(TrajectoryConfig(surface=TORUS, T=150.0, seed=5))
    assert [(r.label, r.t_entry, r.E, r.tw) for r in a.records] == [
        (r.label, r.t_entry, r.E, r.tw) for r in b.records
    ]


# ---------------------------------------------------------------------------
# brute-force sweep: the candidate family covers every horoball met


@pytest.mark.parametrize("surface", [TORUS, L_ORIGAMI], ids=["torus", "L"])
def test_sweep_against_float_kernel(surface):
    # independent route: enumerate ALL primitive directions with small
    # denominator and intersect with the float kernel; the engine (exact
    # integers + Stern-Brocot candidates) must find the same excursions
    # with matching times.  Kernel times are hyperbolic arclength, engine
    # times are Teichmueller (half).
    T = 4.0
    eps = epsilon0(surface) / 2
    theta = Fraction(961, 2237)  # no small-denominator structure
    cfg = TrajectoryConfig(surface=surface, T=T, theta=theta, eps=eps)
    engine = {
        (r.p, r.q, r.cyl_index): r for r in enumerate_excursions(cfg).records if r.complete
    }

    base = UhpPoint(0.0, 1.0)
    ray = geodesic_ray(base, float(theta))
    found = {}
    for q in range(0, 130):
        for p in range(-2, q + 3):
            if math.gcd(p, q) != 1:
                continue
            direction = (1, 0) if q == 0 else (p, q)
            if q == 0 and p != 1:
                continue
            cyls = sorted(
                ((c.circumference, c.height) for c in cylinder_decomposition(surface, direction)),
                reverse=True,
            )
            for idx, (circ, height) in enumerate(cyls):
                if q == 0:
                    ball = Horoball(INFINITY, surface.n * eps / circ**2)
                else:
                    ball = Horoball(p / q, surface.n * eps / (circ**2 * q**2))
                geom = intersect(ray, ball)
                if geom is None or geom.unbounded:
                    continue
                t_teich = geom.t_entry / 2
                if t_teich < T and geom.t_exit > geom.t_entry + 1e-9:
                    found[(p if q else 1, q, idx)] = geom
    assert set(found) == set(engine)
    for key, geom in found.items():
        assert engine[key].t_entry == pytest.approx(geom.t_entry / 2, abs=1e-7)
        assert engine[key].t_exit == pytest.approx(geom.t_exit / 2, abs=1e-7)
        assert engine[key].phi == pytest.approx(geom.phi, rel=1e-6, abs=1e-12)
        assert engine[key].phi_max == pytest.approx(geom.phi_max, rel=1e-6)


# ---------------------------------------------------------------------------
# filter_excursions


def _synthetic(E, t_entry, t_exit, weight=1.0):
    return ExcursionRecord(
        label="s",
        p=0,
        q=1,
        cyl_index=0,
        weight=weight,
        t_entry=t_entry,
        t_exit=t_exit,
        phi=0.01,
        phi_max=0.05,
        E=E,
        E_area=weight * E,
        tw=2 * E,
        complete=t_exit != INFINITY,
    )


def test_filter_all_shallow():
    records = [_synthetic(1.0, 3.0, 4.0), _synthetic(2.0, 5.0, 6.0)]
    kept, dropped = filter_excursions(records, xi=2.0, T=10.0)
    assert kept == []
    assert dropped.shallow == 2
    assert dropped.shallow_E_area == pytest.approx(3.0)


def test_filter_threshold_value():
    # 1/xi'(2) = 4/sqrt(3) ~ 2.309
    records = [_synthetic(2.3, 5.0, 6.0), _synthetic(2.32, 7.0, 8.0)]
    kept, _ = filter_excursions(records, xi=2.0, T=10.0)
    assert [r.E for r in kept] == [2.32]
    assert 1 / xi_prime(2.0) == pytest.approx(2.3094, abs=1e-4)


def test_filter_keeps_one_deep_late_record():
    records = [_synthetic(9.0, 1.0, 1.5), _synthetic(9.0, 5.0, 6.0), _synthetic(9.0, 9.5, 12.0)]
    kept, dropped = filter_excursions(records, xi=2.0, T=10.0, s_xi=2.0)
    assert [r.t_entry for r in kept] == [5.0]
    assert dropped.early == 1 and dropped.final_partial == 1
    assert kept[0].kept and not records[0].kept


def test_complete_records_horizon():
    records = [_synthetic(9.0, 1.0, 1.5), _synthetic(9.0, 5.0, 12.0)]
    assert [r.t_entry for r in complete_records(records, 10.0)] == [1.0]
    assert [r.t_entry for r in complete_records(records, 15.0)] == [1.0, 5.0]


# ---------------------------------------------------------------------------
# sandwich and twist-coefficient structure (unit scale)


def test_sandwich_holds_on_kept_records():
    xi = 2.0
    checked = 0
    for seed in (21, 22):
        cfg = TrajectoryConfig(surface=TORUS, T=400.0, seed=seed, xi=xi)
        result = enumerate_excursions(cfg)
        kept, _ = filter_excursions(result.records, xi=xi, T=cfg.T, s_xi=2.0)
        for rec in kept:
            lo = 2 * rec.weight / (result.eps * xi) * rec.E
            hi = 2 * rec.weight * xi / result.eps * rec.E
            assert lo < rec.tw < hi
            checked += 1
    assert checked > 50


def test_torus_twist_tracks_coefficients():
    # deep records at convergent k have tw close to 2 a_{k+1}: the ratio
    # interquartile range stays within a factor-2 band of its median
    cfg = TrajectoryConfig(surface=TORUS, T=600.0, seed=31)
    result = enumerate_excursions(cfg)
    pairs = list(convergent_pairs(result.coefficients))
    index_of = {pq: k for k, pq in enumerate(pairs)}
    ratios = []
    for rec in result.records:
        if not rec.complete or rec.E < 2.5:
            continue
        k = index_of.get((rec.p, rec.q))
        if k is None or k + 1 >= len(result.coefficients):
            continue
        ratios.append(rec.tw / result.coefficients[k + 1])
    assert len(ratios) >= 20
    ratios.sort()
    q25 = ratios[len(ratios) // 4]
    q75 = ratios[(3 * len(ratios)) // 4]
    med = ratios[len(ratios) // 2]
    assert med / 2 <= q25 and q75 <= 2 * med
