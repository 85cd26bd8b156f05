"""
Tests for brute-force curve enumeration and the Cohen-Lenstra quantities
"""

import importlib
import math

import pytest
import sympy

from app.core.config import settings
from app.core.errors import PreconditionError
from app.models.schemas import GroupShape
from app.services.cache import cache
from app.services.curve_lab import _add, _affine_points, _count_row, curve_lab

curve_lab_module = importlib.import_module("app.services.curve_lab")


def brute_point_count(p: int, a: int, b: int) -> int:
    return 1 + sum(1 for x in range(p) for y in range(p) if (y * y - x ** 3 - a * x - b) % p == 0)


def brute_orders(p: int, a: int, b: int):
    """Order of every affine point by repeated addition"""
    orders = []
    for P in _affine_points(p, a, b):
        Q, n = P, 1
        while Q is not None:
            Q = _add(Q, P, a, p)
            n += 1
        orders.append(n)
    return orders


def shape(m: int, k: int) -> GroupShape:
    return GroupShape(m=m, k=k)


class TestPointCounting:
    """Test cases for ec_point_count and shape recovery"""

    @pytest.mark.parametrize("p, a, b, expected", [(5, 0, 1, 6), (5, 1, 0, 4)])
    def test_documented_counts(self, p, a, b, expected):
        """Test the worked point counts"""
        assert curve_lab.ec_point_count(p, a, b) == expected

    def test_singular_curve_rejected(self):
        """Test that y^2 = x^3 is rejected"""
        with pytest.raises(PreconditionError):
            curve_lab.ec_point_count(7, 0, 0)

    def test_small_field_rejected(self):
        """Test that p < 5 and composite p are rejected"""
        with pytest.raises(PreconditionError):
            curve_lab.ec_point_count(3, 1, 1)
        with pytest.raises(PreconditionError):
            curve_lab.ec_point_count(9, 1, 1)

    def test_matches_point_enumeration(self):
        """Test the character sum against direct (x, y) enumeration"""
        p = 13
        for a in range(p):
            for b in range(p):
                if (4 * a ** 3 + 27 * b * b) % p:
                    assert curve_lab.ec_point_count(p, a, b) == brute_point_count(p, a, b)

    def test_vectorized_row_matches_scalar(self):
        """Test that the per-a row count agrees with the scalar count"""
        p = 31
        for a in range(p):
            row = _count_row(p, a)
            for b in range(p):
                if (4 * a ** 3 + 27 * b * b) % p:
                    assert int(row[b]) == curve_lab.ec_point_count(p, a, b)

    def test_coefficients_reduced(self):
        """Test that a and b are taken modulo p"""
        assert curve_lab.ec_point_count(5, 6, 11) == curve_lab.ec_point_count(5, 1, 1)

    def test_shape_of_full_two_torsion(self):
        """Test that y^2 = x^3 + x over F_5 is Z/2 x Z/2"""
        assert curve_lab.group_shape_of_curve(5, 1, 0) == shape(2, 1)

    def test_shape_is_true_exponent(self):
        """Test that mk is the largest point order and every order divides it"""
        for p in (7, 11, 13, 17):
            for a in range(p):
                for b in range(p):
                    if (4 * a ** 3 + 27 * b * b) % p == 0:
                        continue
                    s = curve_lab.group_shape_of_curve(p, a, b)
                    orders = brute_orders(p, a, b) or [1]
                    assert max(orders) == s.exponent, (p, a, b)
                    assert all(s.exponent % o == 0 for o in orders)

    def test_prime_order_stops_after_one_point(self, monkeypatch):
        """Test that a cyclic group of prime order needs one point order, a non-cyclic one needs every point"""
        calls = []
        real = curve_lab_module._point_order

        def counted(*args):
            calls.append(args[0])
            return real(*args)

        monkeypatch.setattr(curve_lab_module, "_point_order", counted)
        for p in (11, 13):
            for a in range(p):
                for b in range(p):
                    if (4 * a ** 3 + 27 * b * b) % p == 0 or not sympy.isprime(curve_lab.ec_point_count(p, a, b)):
                        continue
                    calls.clear()
                    curve_lab.group_shape_of_curve(p, a, b)
                    assert len(calls) == 1, (p, a, b)

        calls.clear()
        assert curve_lab.group_shape_of_curve(5, 1, 0) == shape(2, 1)
        assert len(calls) == 3

    def test_curve_record(self):
        """Test that curve_record carries order, trace and shape"""
        rec = curve_lab.curve_record(7, 0, 5)
        assert rec.N == rec.shape.order
        assert rec.trace == 7 + 1 - rec.N
        assert rec.trace ** 2 < 4 * 7
        assert (7 - 1) % rec.shape.m == 0


class TestRuck:
    """Test cases for the admissible group enumeration"""

    def test_order_four_over_f5(self):
        """Test the two groups of order 4 over F_5"""
        assert set(curve_lab.ruck_enumerate(4, 5)) == {shape(1, 4), shape(2, 1)}

    def test_order_p_is_cyclic(self):
        """Test that N = p forces the cyclic group"""
        assert set(curve_lab.ruck_enumerate(5, 5)) == {shape(1, 5)}

    def test_missing_roots_of_unity_force_cyclic(self):
        """Test that 11 not dividing 112 leaves only Z/121"""
        assert set(curve_lab.ruck_enumerate(121, 113)) == {shape(1, 121)}

    def test_constraints(self):
        """Test the exposed b_l bounds"""
        constraint = curve_lab.ruck_constraints(16, 17)
        assert constraint.bounds == {2: 2}
        assert constraint.h_p == 0

    def test_outside_window_rejected(self):
        """Test that N outside the Hasse window is rejected"""
        with pytest.raises(PreconditionError):
            curve_lab.ruck_enumerate(11, 5)

    def test_census_equals_admissible_groups(self, fresh_cache):
        """Test census shapes against the enumeration for every p <= 50"""
        for p in sympy.primerange(5, 51):
            observed = {}
            for s in curve_lab.census(p).as_dict():
                assert (p + 1 - s.order) ** 2 < 4 * p
                assert (p - 1) % s.m == 0
                observed.setdefault(s.order, set()).add(s)
            s4 = math.isqrt(4 * p)
            for N in range(p + 1 - s4, p + 2 + s4):
                if (p + 1 - N) ** 2 < 4 * p:
                    assert observed.get(N, set()) == set(curve_lab.ruck_enumerate(N, p)), (p, N)

    @pytest.mark.slow
    def test_census_equals_admissible_groups_to_100(self, fresh_cache):
        """Test census shapes against the enumeration for every p <= 100"""
        for p in sympy.primerange(53, 101):
            observed = {}
            for s in curve_lab.census(p).as_dict():
                observed.setdefault(s.order, set()).add(s)
            for N, shapes in observed.items():
                assert shapes == set(curve_lab.ruck_enumerate(N, p))
            s4 = math.isqrt(4 * p)
            window = [N for N in range(p + 1 - s4, p + 2 + s4) if (p + 1 - N) ** 2 < 4 * p]
            assert sorted(observed) == window


class TestCensus:
    """Test cases for census"""

    def test_f5(self, fresh_cache):
        """Test the 20 curves over F_5"""
        census = curve_lab.census(5)
        assert census.total == 20
        assert census.as_dict()[shape(2, 1)] >= 1

    def test_totals(self, fresh_cache):
        """Test that every nonsingular (a, b) is counted once"""
        for p in sympy.primerange(5, 48):
            assert curve_lab.census(p).total == p * p - p

    @pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19, 23, 37])
    def test_iso_class_counts(self, p, fresh_cache):
        """Test the number of isomorphism classes against 2p + {6, 2, 4, 0}"""
        extra = {1: 6, 5: 2, 7: 4, 11: 0}[p % 12]
        iso = curve_lab.census(p, mode="iso")
        assert iso.total == 2 * p + extra
        assert set(iso.as_dict()) == set(curve_lab.census(p).as_dict())

    def test_sorted_by_shape(self, fresh_cache):
        """Test that counts come sorted by (m, k)"""
        keys = [c.shape.sort_key() for c in curve_lab.census(29).counts]
        assert keys == sorted(keys)

    def test_worker_count_does_not_change_results(self, fresh_cache):
        """Test determinism of the census across worker counts"""
        one = curve_lab.census(41, threads=1)
        cache.clear_all()
        three = curve_lab.census(41, threads=3)
        assert one == three

    def test_cached(self, fresh_cache):
        """Test that a second census is served from the cache"""
        first = curve_lab.census(11)
        second = curve_lab.census(11)
        assert first is second
        assert cache.get_stats()["hits"] >= 1

    def test_bounds(self):
        """Test the census preconditions"""
        with pytest.raises(PreconditionError):
            curve_lab.census(3)
        with pytest.raises(PreconditionError):
            curve_lab.census(503)
        with pytest.raises(PreconditionError):
            curve_lab.census(5, mode="twisted")


class TestCohenLenstra:
    """Test cases for M(G), #Aut and the Cohen-Lenstra pair"""

    def test_m_of_g_z11_squared(self, fresh_cache):
        """Test that Z/11 x Z/11 is never a curve group"""
        assert curve_lab.M_of_G(shape(11, 1)).total == 0

    def test_m_of_g_trivial_is_censored(self, fresh_cache):
        """Test that the trivial group's window lies below 5"""
        result = curve_lab.M_of_G(shape(1, 1))
        assert result.total == 0
        assert result.censored is True

    def test_m_of_g_order_five(self, fresh_cache):
        """Test M(Z/5) as the census sum over p = 5 and 7"""
        result = curve_lab.M_of_G(shape(1, 5))
        expected = sum(curve_lab.census(p).as_dict().get(shape(1, 5), 0) for p in (5, 7))
        assert result.total == expected
        assert sorted(result.per_prime) == [5, 7]
        assert result.censored is True

    def test_m_of_g_out_of_range(self):
        """Test that windows beyond the census bound are rejected"""
        with pytest.raises(PreconditionError):
            curve_lab.M_of_G(shape(1, 600))

    @pytest.mark.parametrize("m, k, expected", [(1, 1, 1), (1, 6, 2), (2, 1, 6), (2, 2, 8), (3, 1, 48)])
    def test_aut_order_known(self, m, k, expected):
        """Test automorphism counts of small groups"""
        assert curve_lab.aut_order(shape(m, k)) == expected
        assert curve_lab.aut_order(shape(m, k), method="brute") == expected

    def test_aut_cyclic_is_totient(self):
        """Test that #Aut(Z/n) = phi(n)"""
        for n in range(1, 200):
            assert curve_lab.aut_order(shape(1, n)) == sympy.totient(n)

    def test_aut_closed_form_matches_brute(self):
        """Test closed form against brute force for every order <= 200"""
        for m in range(1, 15):
            for k in range(1, 200 // (m * m) + 1):
                s = shape(m, k)
                assert curve_lab.aut_order(s) == curve_lab.aut_order(s, method="brute"), (m, k)

    @pytest.mark.slow
    def test_aut_closed_form_matches_brute_to_1000(self):
        """Test closed form against brute force for every order <= 1000"""
        for m in range(1, 32):
            for k in range(1, 1000 // (m * m) + 1):
                s = shape(m, k)
                assert curve_lab.aut_order(s) == curve_lab.aut_order(s, method="brute"), (m, k)

    def test_aut_brute_bound(self):
        """Test the brute-force size guard"""
        with pytest.raises(PreconditionError):
            curve_lab.aut_order(shape(1, settings.AUT_BRUTE_MAX_ORDER + 1), method="brute")

    def test_cl_ratio_values(self, fresh_cache):
        """Test the documented Cohen-Lenstra pairs"""
        assert curve_lab.cohen_lenstra_ratio(shape(11, 1)).lhs == 0.0
        trivial = curve_lab.cohen_lenstra_ratio(shape(1, 1))
        assert trivial.rhs_unnormalized == 1.0
        assert trivial.lhs == 0.0
        klein = curve_lab.cohen_lenstra_ratio(shape(2, 1))
        assert klein.aut == 6
        assert klein.rhs_unnormalized == pytest.approx(16 / 3)
        assert klein.lhs == pytest.approx(klein.m_of_g * math.log(4) / 8)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
