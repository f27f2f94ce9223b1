"""Position moves: restriction, bigon and monogon removal, reduction, flips."""

from __future__ import annotations

import pytest

from test_surface_map import (
    figure_eight,
    marker_loop_on_torus,
    sphere_bigon_pair,
    torus_pencil_three,
    torus_square,
)

from curvecubes.position import (
    classify_faces,
    forms_triangle,
    reduce,
    reidemeister_iii,
    remove_bigon,
    restrict,
)
from curvecubes.surface_map import (
    CombinatorialMap,
    Curve,
    CurveSystem,
    RegionTable,
    faces,
    genus,
    intersection_matrix,
    maps_isomorphic,
    perturb_pencil,
    validate_map,
    vertices,
)


# ---- hand-built example maps ----


def parallel_pair_on_torus():
    """Two homotopic curves crossing twice: two lens faces and an annulus.

    The annulus region covers faces 1 and 2, so the per-face label reading
    is wrong for it; ``parallel_pair_regions`` supplies the honest table.
    """
    m = CombinatorialMap(
        sigma=[7, 5, 6, 4, 0, 2, 1, 3],
        alpha=[1, 0, 3, 2, 5, 4, 7, 6],
        curve_of_dart=[0, 0, 0, 0, 1, 1, 1, 1],
        face_genus={1: 1},
    )
    return CurveSystem(m, [Curve(0, "a"), Curve(1, "b")], genus_declared=1)


def parallel_pair_regions() -> RegionTable:
    return RegionTable({0: 0, 3: 3, 1: 1, 2: 1}, {0: 1, 3: 1, 1: 0})


def pierced_petal_on_sphere():
    """A figure eight with a circle passing through one petal.

    The circle cuts the pierced petal into a triangle and a bigon and bounds
    a further bigon outside it; the other petal stays a clean monogon.
    """
    m = CombinatorialMap(
        sigma=[1, 2, 3, 0, 11, 8, 10, 9, 4, 6, 7, 5],
        alpha=[4, 7, 3, 2, 0, 6, 5, 1, 9, 8, 11, 10],
        curve_of_dart=[0] * 8 + [1] * 4,
    )
    return CurveSystem(m, [Curve(0, "a"), Curve(1, "b")], genus_declared=0)


def crossed_lenses_on_torus():
    """Two homotopic curves whose lens faces are each pierced by a transversal.

    Curves a and b cross twice; c runs through one lens and d through the
    other, so no face is a bigon and clearing either lens needs a triangle
    flip first.  Minimal position keeps the four transversal crossings.
    """
    m = CombinatorialMap(
        sigma=[11, 12, 15, 9, 10, 6, 0, 14, 13, 4, 3, 5,
               2, 7, 8, 1, 22, 21, 20, 23, 19, 16, 17, 18],
        alpha=[1, 0, 3, 2, 16, 17, 7, 6, 9, 8, 18, 19,
               13, 12, 15, 14, 4, 5, 10, 11, 21, 20, 23, 22],
        curve_of_dart=[0] * 6 + [1] * 6 + [2] * 4 + [0, 0, 1, 1] + [3] * 4,
    )
    curves = [Curve(0, "a"), Curve(1, "b"), Curve(2, "c"), Curve(3, "d")]
    return CurveSystem(m, curves, genus_declared=1)


def crossing_count(system: CurveSystem) -> int:
    return sum(1 for orb in vertices(system.map) if len(orb) >= 4)


# ---- face census ----


def test_census_sphere_pair():
    census = classify_faces(sphere_bigon_pair())
    assert census.bigons == [0, 1, 2, 3]
    assert census.monogons == []
    assert census.self_bigons == []
    assert census.triangles == []


def test_census_figure_eight():
    census = classify_faces(figure_eight())
    assert census.monogons == [1, 3]
    # the outer face is two-sided but pinched at the crossing
    assert census.bigons == [0]
    assert census.self_bigons == [0]


def test_census_crossed_lenses():
    census = classify_faces(crossed_lenses_on_torus())
    assert census.triangles == [0, 2, 5, 10]
    assert census.monogons == []
    assert census.bigons == []


def test_census_pencil_triangles():
    census = classify_faces(torus_pencil_three())
    assert census.triangles == [0, 1]


def test_census_honors_region_table():
    s = parallel_pair_on_torus()
    census = classify_faces(s, parallel_pair_regions())
    # the annulus faces are two-sided but not disks, so only the lenses count
    assert census.bigons == [0, 3]


# ---- restriction ----


def test_restrict_to_single_curve_leaves_marker():
    out = restrict(torus_square(), [0])
    diag = validate_map(out)
    assert diag.ok, diag.violations
    assert maps_isomorphic(out.map, marker_loop_on_torus().map)


def test_restrict_to_all_curves_is_identity():
    s = torus_square()
    out = restrict(s, [0, 1])
    assert maps_isomorphic(out.map, s.map)


def test_restrict_unknown_curve_rejected():
    with pytest.raises(ValueError):
        restrict(torus_square(), [0, 5])


def test_restrict_drops_transversals():
    sub = restrict(crossed_lenses_on_torus(), [0, 1, 2])
    diag = validate_map(sub)
    assert diag.ok, diag.violations
    assert sub.map.num_darts == 16
    assert intersection_matrix(sub) == [[0, 2, 1], [2, 0, 1], [1, 1, 0]]
    # with d gone one lens is a clean face bigon again
    assert classify_faces(sub).bigons != []


def test_restrict_filters_pencil_records():
    s = torus_pencil_three()
    resolved = perturb_pencil(s, 0)
    assert len(resolved.pencils) == 1
    assert restrict(resolved, [0, 1, 2]).pencils == resolved.pencils
    assert restrict(resolved, [0, 1]).pencils == []


# ---- bigon removal ----


def test_remove_bigon_on_sphere_pair():
    s = sphere_bigon_pair()
    out = remove_bigon(s, 0)
    diag = validate_map(out)
    assert diag.ok, diag.violations
    assert diag.genus == 0
    assert crossing_count(out) == 0
    assert intersection_matrix(out) == [[0, 0], [0, 0]]
    # disjoint circles on the sphere: disk | annulus | disk
    assert sorted(out.map.face_genus.values()) == [1]
    census = classify_faces(out)
    assert census.bigons == [] and census.monogons == []


def test_remove_bigon_rejects_other_faces():
    with pytest.raises(ValueError):
        remove_bigon(torus_square(), 0)


# ---- reduction ----


def test_reduce_sphere_pair():
    out = reduce(sphere_bigon_pair())
    assert validate_map(out).ok
    assert out.map.num_darts == 4
    assert crossing_count(out) == 0
    assert sorted(out.map.face_genus.values()) == [1]


def test_reduce_parallel_pair_keeps_annulus_structure():
    s = parallel_pair_on_torus()
    out = reduce(s, table=parallel_pair_regions())
    diag = validate_map(out)
    assert diag.ok, diag.violations
    assert diag.genus == 1
    assert crossing_count(out) == 0
    assert out.map.num_darts == 4
    # two disjoint parallel loops split the torus into two annuli
    assert sorted(out.map.face_genus.values()) == [1, 1]


def test_reduce_figure_eight_to_marker():
    out = reduce(figure_eight())
    assert validate_map(out).ok
    assert out.map.num_darts == 2
    assert crossing_count(out) == 0
    assert genus(out.map) == 0


def test_reduce_pierced_petal():
    out = reduce(pierced_petal_on_sphere())
    diag = validate_map(out)
    assert diag.ok, diag.violations
    assert diag.genus == 0
    assert crossing_count(out) == 0
    assert intersection_matrix(out) == [[0, 0], [0, 0]]
    assert len(faces(out.map)) == 4
    assert sorted(out.map.face_genus.values()) == [1]


def test_reduce_crossed_lenses_needs_flips():
    s = crossed_lenses_on_torus()
    out = reduce(s)
    diag = validate_map(out)
    assert diag.ok, diag.violations
    assert diag.genus == 1
    assert crossing_count(out) == 4
    assert intersection_matrix(out) == [
        [0, 0, 1, 1],
        [0, 0, 1, 1],
        [1, 1, 0, 0],
        [1, 1, 0, 0],
    ]
    census = classify_faces(out)
    assert census.monogons == [] and census.bigons == []


def test_reduce_is_idempotent():
    out = reduce(crossed_lenses_on_torus())
    again = reduce(out)
    assert maps_isomorphic(out.map, again.map)


def test_reduce_leaves_minimal_systems_alone():
    s = torus_square()
    out = reduce(s)
    assert maps_isomorphic(out.map, s.map)
    resolved = perturb_pencil(torus_pencil_three(), 0)
    out = reduce(resolved)
    assert maps_isomorphic(out.map, resolved.map)


# ---- triangle flips ----


def test_flip_changes_and_double_flip_restores():
    s = crossed_lenses_on_torus()
    once = reidemeister_iii(s, 0)
    assert validate_map(once).ok
    assert not maps_isomorphic(s.map, once.map)
    assert intersection_matrix(once) == intersection_matrix(s)
    # exactly one a/b/c triangle survives the flip; flipping it undoes it
    census = classify_faces(once)
    fl = {f.key: f for f in faces(once.map)}
    back_keys = [k for k in census.triangles
                 if set(fl[k].side_curves) == {0, 1, 2}]
    assert len(back_keys) == 1
    twice = reidemeister_iii(once, back_keys[0])
    assert maps_isomorphic(s.map, twice.map)


def test_flip_rejects_non_triangles():
    with pytest.raises(ValueError):
        reidemeister_iii(crossed_lenses_on_torus(), 3)


def test_flip_rejects_pencil_corners():
    with pytest.raises(ValueError):
        reidemeister_iii(torus_pencil_three(), 0)


# ---- triangle formation ----


def test_forms_triangle_at_pencil():
    assert forms_triangle(torus_pencil_three(), (0, 1, 2))


def test_forms_triangle_resolved_pencil():
    resolved = perturb_pencil(torus_pencil_three(), 0)
    assert forms_triangle(resolved, (0, 1, 2))


def test_forms_triangle_negative():
    # a and b are homotopic, so the triple cannot bound a triangle
    assert not forms_triangle(crossed_lenses_on_torus(), (0, 1, 2))


def test_forms_triangle_needs_three_curves():
    with pytest.raises(ValueError):
        forms_triangle(torus_pencil_three(), (0, 1))
    with pytest.raises(ValueError):
        forms_triangle(torus_pencil_three(), (0, 0, 1))
