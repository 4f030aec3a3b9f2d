import math

import numpy as np
import pytest

from ckp.core import ConstructionError, Instance, eval_g
from ckp.generators import GenSpec, example1, example2, generate
from ckp.ncr import (
    boundary_theta, build_x, delta_lower, delta_upper, item_cost, ordering,
    profit_density, reverse_point, reverse_points, solve_ncr,
)

from oracles import (
    boundary_patterns, brute_force_optimum, delta_lower_by_sampling,
    delta_upper_by_patterns, ncr_optimum_by_patterns, random_instance,
)

E2 = example2(6)
TWO = Instance([2.0, 1.0], [1.0, 1.0], [0.0, 0.0], b=1.5, kappa=1.0)
# smaller root of 6.25 t^2 - 21 t + 5 = 0
DL_E2 = 1.0 + 1.5 * (21 - math.sqrt(316)) / 12.5


def test_item_cost():
    assert item_cost(E2, 0, 4.0) == 3.5
    assert item_cost(TWO, 0, 7.3) == 1.0
    assert [item_cost(E2, j, 0.0) for j in range(3)] == [2.0, 3.0, 2.5]
    with pytest.raises(ValueError):
        item_cost(E2, 0, -1.0)


@pytest.mark.parametrize("j, k, delta, value", [
    (1, 2, 1.0, 0.25), (0, 1, 4.0, 1 / 3.5), (0, 2, 9.0, 1 / 3),
])
def test_profit_density_crossings(j, k, delta, value):
    assert profit_density(E2, j, delta) == pytest.approx(value, rel=1e-15)
    assert profit_density(E2, k, delta) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("delta, perm", [
    (0.5, (2, 3, 1)), (1.0, (3, 2, 1)), (2.0, (3, 2, 1)), (4.0, (3, 1, 2)),
    (5.0, (3, 1, 2)), (9.0, (1, 3, 2)), (10.0, (1, 3, 2)), (20.0, (1, 3, 2)),
    (0.0, (1, 3, 2)),
])
def test_ordering_example2(delta, perm):
    assert tuple(ordering(E2, delta).perm + 1) == perm


def test_ordering_zero_puts_deterministic_items_first():
    inst = Instance([1.0, 1.0, 5.0, 1.0], [1.0, 4.0, 1.0, 2.0], [1.0, 0.0, 2.0, 0.0],
                    b=3.0, kappa=1.0)
    assert ordering(inst, 0.0).perm.tolist() == [3, 1, 2, 0]
    assert ordering(inst, 1.0).perm.tolist()[0] == 2


def test_ordering_ties_by_index():
    inst = Instance([1.0] * 3, [1.0] * 3, [1.0] * 3, b=2.0, kappa=1.0)
    assert ordering(inst, 3.0).perm.tolist() == [0, 1, 2]


def test_boundary_theta_stable_root():
    assert boundary_theta(3.0, 1.0, 2.0, 3.5, 1.5) == pytest.approx(5 / 18, rel=1e-15)
    assert boundary_theta(2.5, 1.5, 2.0, 4.0, 3.0) == pytest.approx(0.16, rel=1e-14)
    # kappa = 0: plain knapsack remainder
    assert boundary_theta(4.0, 9.0, 0.0, 1.0, 5.0) == 0.25
    # nearly coincident roots
    th = boundary_theta(1.0, 1e-12, 1.0, 1.0 + 1e-6, 1.0)
    assert 1.0 + th + math.sqrt(1.0 + 1e-12 * th) == pytest.approx(2.0 + 1e-6, abs=1e-15)


def test_build_x_examples():
    s = build_x(TWO, 0.3)
    assert s.x.tolist() == [1.0, 0.5] and s.objective == 2.5 and s.frac_index == 1
    s = build_x(E2, 2.0)
    assert s.x == pytest.approx([0, 5 / 18, 1], abs=1e-15)
    assert s.objective == pytest.approx(1 + 5 / 18, rel=1e-14)
    s = build_x(E2, 0.0)
    assert s.x == pytest.approx([1, 0, 0.16], abs=1e-15)
    assert s.objective == pytest.approx(1.16, rel=1e-14)


def test_build_x_requires_overflow():
    inst = Instance([1.0, 1.0], [1.0, 1.0], [0.0, 0.0], b=5.0, kappa=1.0)
    with pytest.raises(ConstructionError):
        build_x(inst, 1.0)


def test_reverse_point_examples():
    assert reverse_point(E2, 1, 2).q == pytest.approx(1.0, rel=1e-14)
    assert reverse_point(E2, 2, 1).q == pytest.approx(1.0, rel=1e-14)
    rp = reverse_point(E2, 0, 1)
    assert rp.q == pytest.approx(4.0, rel=1e-14) and (rp.k, rp.l) == (1, 0)
    assert reverse_point(E2, 0, 2).q == pytest.approx(9.0, rel=1e-14)
    twin = Instance([1.0, 2.0], [1.0, 2.0], [1.0, 2.0], b=3.0, kappa=1.0)
    assert reverse_point(twin, 0, 1) is None
    with pytest.raises(ValueError):
        reverse_point(E2, 1, 1)


def test_reverse_points_example2():
    assert reverse_points(E2) == pytest.approx([1.0, 4.0, 9.0], abs=1e-12)


def test_reverse_point_property_random():
    """Densities agree at q, and the pair swaps order across q."""
    rng = np.random.default_rng(11)
    found = 0
    for _ in range(300):
        inst = random_instance(rng)
        for k in range(inst.n):
            for l in range(k + 1, inst.n):
                rp = reverse_point(inst, k, l)
                if rp is None:
                    continue
                found += 1
                pk = profit_density(inst, rp.k, rp.q)
                pl = profit_density(inst, rp.l, rp.q)
                assert pk == pytest.approx(pl, rel=1e-10)
                assert inst.sigma2[rp.k] / inst.c[rp.k] < inst.sigma2[rp.l] / inst.c[rp.l]
                assert inst.a[rp.k] / inst.c[rp.k] > inst.a[rp.l] / inst.c[rp.l]
                below = profit_density(inst, rp.k, rp.q * 0.999) - profit_density(inst, rp.l, rp.q * 0.999)
                above = profit_density(inst, rp.k, rp.q * 1.001) - profit_density(inst, rp.l, rp.q * 1.001)
                assert below > 0 > above
                perm = ordering(inst, rp.q * 1.001).perm.tolist()
                assert perm.index(rp.l) < perm.index(rp.k)
    assert found > 100


def test_delta_upper_examples():
    assert delta_upper(E2) == pytest.approx(3.24, rel=1e-13)
    assert delta_upper(TWO) == 0.0
    # two equal items filling item 1 then part of item 2: dense grid optimum 3.8012 (step 1e-4)
    inst = Instance([1.0, 1.0], [1.0, 1.0], [4.0, 4.0], b=2.9, kappa=1.0)
    du = delta_upper(inst)
    assert 3.8012 <= du <= 3.8012 + 4e-4
    theta = (du - 4.0) / 4.0 if du > 4 else du / 4.0
    assert eval_g(inst, [1.0, theta] if du > 4 else [theta, 0.0]) == pytest.approx(2.9)


def test_delta_lower_examples():
    assert delta_lower(TWO) == 0.0
    assert delta_lower(E2) == pytest.approx(DL_E2, rel=1e-13)
    assert DL_E2 == pytest.approx(1.3868, abs=1e-4)


def test_delta_bounds_against_oracles():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        inst = random_instance(rng)
        dl, du = delta_lower(inst), delta_upper(inst)
        assert dl <= du + 1e-12
        objs, vars_ = boundary_patterns(inst.c, inst.a, inst.sigma2, inst.kappa, inst.b)
        assert du == pytest.approx(vars_.max(), rel=1e-9, abs=1e-12)
        best = objs.max()
        opt_vars = vars_[objs >= best * (1 - 1e-12)]
        assert np.all(opt_vars >= dl - 1e-9) and np.all(opt_vars <= du + 1e-9)


def test_delta_lower_against_sampling():
    rng = np.random.default_rng(6)
    for _ in range(30):
        inst = random_instance(rng, n=4)
        assert delta_lower(inst) <= delta_lower_by_sampling(inst, rng, 3000) + 1e-9


def test_solve_ncr_example2():
    res = solve_ncr(E2)
    assert res.z_nc == pytest.approx(23 / 18, rel=1e-14)
    assert res.solution.x == pytest.approx([0, 5 / 18, 1], abs=1e-14)
    assert res.deltas.candidates == pytest.approx([DL_E2], rel=1e-13)
    assert res.deltas.delta_count == 5 and res.deltas.delta_star_count == 1
    assert ncr_optimum_by_patterns(E2) == pytest.approx(res.z_nc, rel=1e-12)
    x, z, deltas = res
    assert z == res.z_nc


def test_solve_ncr_fractional_knapsack():
    res = solve_ncr(TWO)
    assert res.z_nc == 2.5
    assert res.solution.x.tolist() == [1.0, 0.5]
    assert 0.0 in res.deltas.candidates.tolist()


def test_solve_ncr_example1_bound():
    res = solve_ncr(example1(100))
    assert 3.0 <= res.z_nc <= 6.0 + 1e-9


def test_kappa_zero_is_fractional_knapsack():
    rng = np.random.default_rng(9)
    for _ in range(50):
        inst = random_instance(rng, kappa=0.0)
        order = np.argsort(-inst.c / inst.a, kind="stable")
        room, value = inst.b, 0.0
        for j in order:
            take = min(1.0, room / inst.a[j])
            value += take * inst.c[j]
            room -= take * inst.a[j]
            if room <= 0:
                break
        assert solve_ncr(inst).z_nc == pytest.approx(value, rel=1e-12)
        assert reverse_points(inst).size == 0


def test_ss_family_has_no_crossings():
    for seed in range(5):
        inst = generate(GenSpec("SS", 60, 0.9, seed))
        res = solve_ncr(inst)
        assert res.deltas.n_reverse == 0 and res.deltas.delta_count == 2
        assert res.deltas.delta_star_count <= 2


def test_structure_and_dominance_random():
    rng = np.random.default_rng(21)
    for _ in range(150):
        inst = random_instance(rng)
        res = solve_ncr(inst)
        x = res.solution.x
        assert abs(eval_g(inst, x) - inst.b) <= 1e-9 * inst.b
        assert np.sum((x > 1e-12) & (x < 1 - 1e-12)) <= 1
        du = res.deltas.delta_U
        for d in rng.uniform(0, 2 * max(du, 1e-3), 200):
            s = build_x(inst, d)
            assert np.sum((s.x > 1e-12) & (s.x < 1 - 1e-12)) <= 1
            assert abs(eval_g(inst, s.x) - inst.b) <= 1e-9 * inst.b
            assert s.objective <= res.z_nc + 1e-9


def test_ordering_constant_between_crossings():
    rng = np.random.default_rng(8)
    for _ in range(100):
        inst = random_instance(rng)
        pts = np.concatenate([[0.0], reverse_points(inst)])
        ends = np.concatenate([pts[1:], [pts[-1] * 10 + 10]])
        for lo, hi in zip(pts, ends):
            if hi - lo <= 1e-9 * hi:
                continue
            d1, d2 = rng.uniform(lo, hi, 2)
            d1, d2 = max(d1, lo + 1e-12 * hi), max(d2, lo + 1e-12 * hi)
            assert ordering(inst, d1).perm.tolist() == ordering(inst, d2).perm.tolist()


def test_matches_pattern_enumeration_random():
    rng = np.random.default_rng(17)
    for _ in range(300):
        inst = random_instance(rng)
        z = solve_ncr(inst).z_nc
        assert z == pytest.approx(ncr_optimum_by_patterns(inst), rel=1e-7)


def test_sandwich_random():
    rng = np.random.default_rng(19)
    for _ in range(300):
        inst = random_instance(rng)
        z_opt = brute_force_optimum(inst)
        z = solve_ncr(inst).z_nc
        assert z_opt <= z * (1 + 1e-9) and z <= 2 * z_opt * (1 + 1e-9)


def test_integer_data_with_coincident_crossings():
    """Many exactly coincident crossings from integer data."""
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = 7
        c = rng.integers(1, 4, n).astype(float)
        a = rng.integers(1, 4, n).astype(float)
        s2 = rng.integers(0, 4, n).astype(float)
        k = 2.0
        b = float(max(a + k * np.sqrt(s2)) + rng.integers(0, 6))
        inst = Instance(c, a, s2, b, k)
        from ckp.core import validate
        if validate(inst):
            continue
        assert solve_ncr(inst).z_nc == pytest.approx(ncr_optimum_by_patterns(inst), rel=1e-7)
