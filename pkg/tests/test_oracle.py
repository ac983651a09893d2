import itertools
import random

import pytest
from hypothesis import given, strategies as st

from gigp.oracle import (FiniteDomain, PhiIndex, UnseenEncodingError, all_domains, build_phi_index, count_in_orbit,
                         decode, encode_assignment, enumerate_value_codes, log_form, phi_encode, psi_encode,
                         random_invariant_table, run_suite, set_partitions, verify_expressivity)


def domain(n=4, nv=2, parts=((0, 1), (2, 3))):
    return FiniteDomain(tuple(range(n)), tuple(f"v{i}" for i in range(nv)), parts)


def test_domain_validation():
    with pytest.raises(ValueError):
        FiniteDomain((0, 1), ("a",), ((0,),))
    with pytest.raises(ValueError):
        FiniteDomain((0, 1), ("a",), ((0, 1), (1,)))
    with pytest.raises(ValueError):
        FiniteDomain((), ("a",), ())


def test_value_codes():
    d = domain()
    assert enumerate_value_codes(d) == {"v0": 1, "v1": 2}
    assert enumerate_value_codes(d) == enumerate_value_codes(domain())


def test_psi_examples():
    assert psi_encode([1, 2]) == 6
    assert log_form(psi_encode([1, 2])) == pytest.approx(1.7918, abs=1e-4)
    assert psi_encode([]) == 1
    assert psi_encode([1, 1, 2]) == 12
    assert decode(12) == [1, 1, 2]
    with pytest.raises(ValueError):
        psi_encode([0])


@given(st.lists(st.integers(1, 12), max_size=8), st.randoms())
def test_psi_is_order_free_and_decodable(codes, rnd):
    shuffled = list(codes)
    rnd.shuffle(shuffled)
    assert psi_encode(codes) == psi_encode(shuffled)
    assert decode(psi_encode(codes)) == sorted(codes)


def test_psi_injective_on_small_multisets():
    seen = {}
    for r in range(5):
        for ms in itertools.combinations_with_replacement(range(1, 5), r):
            e = psi_encode(ms)
            assert seen.setdefault(e, ms) == ms


def test_psi_exceeds_64_bits_exactly():
    big = psi_encode([40] * 20)  # 173**20 > 2**64
    assert big > 2**64 and decode(big) == [40] * 20


def test_phi_examples():
    idx = PhiIndex(tag_orbits=False)
    for k in (10, 20):
        idx.add(k)
    assert phi_encode([10], idx) == 2
    assert phi_encode([10, 20], idx) == 6
    with pytest.raises(UnseenEncodingError):
        phi_encode([30], idx)


def test_composed_encoding_injective_on_four_element_domain():
    d = domain()
    codes, index = enumerate_value_codes(d), build_phi_index(d)
    by_code = {}
    assignments = list(d.assignments())
    assert len(assignments) == 16
    for a in assignments:
        g = encode_assignment(d, a, codes, index)
        assert by_code.setdefault(g, d.orbit_class(a)) == d.orbit_class(a)
    assert len(by_code) == 9  # 3 value multisets per 2-element orbit, squared


def test_untagged_orbits_would_collide():
    # {v0} | {v1} and {v1} | {v0} share the bare psi multiset; the orbit tag separates them
    d = domain(2, 2, ((0,), (1,)))
    f = lambda a: a
    assert verify_expressivity(d, f).passed
    rep = verify_expressivity(d, f, tag_orbits=False)
    assert not rep.injective and rep.collisions


def test_constant_function_passes():
    rep = verify_expressivity(domain(), lambda a: 0)
    assert rep.passed and rep.n_assignments == 16 and rep.n_classes == 9


def test_count_function_passes():
    d = domain()
    rep = verify_expressivity(d, count_in_orbit(d, 0, 0))
    assert rep.passed and rep.injective and not rep.collisions


def test_non_invariant_function_rejected_with_witness():
    d = domain()
    rep = verify_expressivity(d, lambda a: a[0])
    assert not rep.passed
    x, y = rep.precondition_violation
    assert d.orbit_class(x) == d.orbit_class(y) and x[0] != y[0]
    assert "witness" in rep.to_text()


def test_report_formats():
    rep = verify_expressivity(domain(), lambda a: 1)
    kv = dict(line.split("=") for line in rep.to_kv().splitlines())
    assert kv["passed"] == "true" and kv["collisions"] == "0"
    assert rep.to_text().startswith("expressivity check: PASS")


def test_set_partition_counts_match_stirling():
    # sum_{k<=3} S(n, k)
    for n, want in [(1, 1), (2, 2), (3, 5), (4, 14), (5, 41), (6, 122)]:
        assert len(list(set_partitions(n, 3))) == want


def test_random_table_is_invariant():
    d = domain(5, 3, ((0, 2), (1, 3, 4)))
    t = random_invariant_table(d, random.Random(1))
    assert verify_expressivity(d, t).passed


def test_full_suite():
    res = run_suite(6, 3, 3, 50, seed=0)
    assert res["passed"] and res["collisions"] == 0 and res["failures"] == 0
    assert res["random_functions"] >= 50
    assert res["domains"] == len(list(all_domains(6, 3, 3)))
