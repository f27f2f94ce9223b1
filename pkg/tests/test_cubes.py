"""Cube dimension, maximal cubes, and the dual square complex."""

from __future__ import annotations

import math

import pytest

from test_position import crossed_lenses_on_torus
from test_surface_map import (
    figure_eight,
    marker_loop_on_torus,
    sphere_bigon_pair,
    torus_pencil_three,
    torus_square,
)

from curvecubes.cubes import (
    TripleCache,
    cube_dimension,
    dual_square_complex,
    is_complete_one_system,
    is_one_system,
    maximal_cubes,
    orbit_upper_bound,
    square_complex_to_dot,
    subset_cube_dimension,
)
from curvecubes.position import reduce
from curvecubes.surface_map import CombinatorialMap, Curve, CurveSystem


# ---- hand-built example maps ----


def twice_crossing_pair_on_torus():
    """Curves of classes (1,0) and (1,2): two essential crossings, no bigon."""
    m = CombinatorialMap(
        sigma=[4, 5, 6, 7, 3, 2, 1, 0],
        alpha=[1, 0, 3, 2, 5, 4, 7, 6],
        curve_of_dart=[0, 0, 0, 0, 1, 1, 1, 1],
    )
    return CurveSystem(m, [Curve(0, "a"), Curve(1, "b")], genus_declared=1)


# ---- one-system predicates ----


def test_one_system_basic():
    assert is_one_system(torus_square())
    assert is_one_system(torus_pencil_three())
    assert not is_one_system(twice_crossing_pair_on_torus())


def test_one_system_judges_homotopy_classes():
    # these all reduce to crossing-free or once-crossing configurations
    assert is_one_system(figure_eight())
    assert is_one_system(crossed_lenses_on_torus())
    assert is_one_system(sphere_bigon_pair())


def test_complete_one_system():
    assert is_complete_one_system(torus_square())
    assert is_complete_one_system(torus_pencil_three())
    assert is_complete_one_system(marker_loop_on_torus())  # vacuous
    assert not is_complete_one_system(crossed_lenses_on_torus())
    assert not is_complete_one_system(sphere_bigon_pair())
    assert not is_complete_one_system(twice_crossing_pair_on_torus())


# ---- maximal cubes ----


def test_single_crossing_pair_is_a_square():
    report = maximal_cubes(torus_square())
    assert report.maximal_cubes == [(0, 1)]
    assert report.dimension == 2


def test_pencil_triple_is_a_three_cube():
    report = maximal_cubes(torus_pencil_three())
    assert report.maximal_cubes == [(0, 1, 2)]
    assert report.dimension == 3


def test_crossed_lenses_have_only_squares():
    report = maximal_cubes(crossed_lenses_on_torus())
    assert report.maximal_cubes == [(0, 2), (0, 3), (1, 2), (1, 3)]
    assert report.dimension == 2


def test_cubes_reject_non_one_systems():
    with pytest.raises(ValueError):
        maximal_cubes(twice_crossing_pair_on_torus())


def test_crossing_free_dimensions():
    assert cube_dimension(marker_loop_on_torus()) == 1
    empty = CurveSystem(CombinatorialMap([], [], []), [])
    assert cube_dimension(empty) == 0


def test_shared_cache_is_consistent():
    s = crossed_lenses_on_torus()
    cache = TripleCache.for_system(s)
    assert maximal_cubes(s, cache).maximal_cubes == \
        maximal_cubes(s).maximal_cubes
    assert cube_dimension(s, cache) == 2


# ---- subset dimensions ----


def test_subset_dimension_ladder():
    s = torus_pencil_three()
    cache = TripleCache.for_system(s)
    assert subset_cube_dimension(s, {0}, cache) == 1
    assert subset_cube_dimension(s, {0, 1}, cache) == 2
    assert subset_cube_dimension(s, {0, 1, 2}, cache) == 3


def test_subset_dimension_disjoint_pair():
    assert subset_cube_dimension(crossed_lenses_on_torus(), {0, 1}) == 1


def test_subset_dimension_rejects_bad_input():
    with pytest.raises(ValueError):
        subset_cube_dimension(torus_square(), set())
    with pytest.raises(ValueError):
        subset_cube_dimension(torus_square(), {0, 9})


# ---- dual square complex ----


def test_square_complex_single_crossing():
    sc = dual_square_complex(torus_square())
    assert sc.vertices == [0]
    assert len(sc.edges) == 2
    assert len(sc.squares) == 1
    assert sc.hyperplanes == {0: [0], 1: [0]}
    assert sc.square_counts() == {0: 1, 1: 1}


def test_square_complex_marker_curve():
    sc = dual_square_complex(marker_loop_on_torus())
    assert sc.squares == []
    assert len(sc.edges) == 1
    assert sc.hyperplanes == {0: []}


def test_square_complex_rejects_pencils():
    with pytest.raises(ValueError):
        dual_square_complex(torus_pencil_three())


def test_square_complex_reduced_lenses():
    sc = dual_square_complex(reduce(crossed_lenses_on_torus()))
    assert len(sc.squares) == 4
    assert len(sc.vertices) == 4
    assert len(sc.edges) == 8
    assert sorted(sc.square_counts().values()) == [2, 2, 2, 2]


def test_square_complex_dot_export():
    sc = dual_square_complex(torus_square())
    dot = square_complex_to_dot(sc)
    assert dot.startswith("graph squares {")
    assert "r0" in dot and "--" in dot


# ---- counting bound ----


def test_orbit_upper_bound_values():
    assert orbit_upper_bound(2) == 2432902008176640000
    assert orbit_upper_bound(3) == math.factorial(42)
    with pytest.raises(ValueError):
        orbit_upper_bound(1)


def test_orbit_upper_bound_formula_identity():
    for g in range(2, 9):
        assert 4 * g * g + 2 * g == 2 * g * (2 * g + 1)
