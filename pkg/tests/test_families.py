"""Generator tests: sign-vector systems, canonical systems, stabilization."""

from __future__ import annotations

import itertools

import pytest

from curvecubes.cubes import is_complete_one_system, maximal_cubes
from curvecubes.families import GammaMetadata, canonical, gamma, is_filling, stabilize
from curvecubes.position import forms_triangle
from curvecubes.surface_map import (
    CombinatorialMap,
    Curve,
    CurveSystem,
    ROLE_DELTA,
    ROLE_DELTA_DOUBLE_PRIME,
    ROLE_DELTA_PRIME,
    ROLE_DOWN,
    ROLE_UP,
    genus,
    intersection_matrix,
    maps_isomorphic,
    perturb_pencil_impl,
    trace_curve,
    validate_map,
    vertices,
)

from test_surface_map import torus_pencil_three, torus_square
from test_position import parallel_pair_on_torus


# ---- helpers ----


def all_eps(g: int):
    return list(itertools.product((1, -1), repeat=g))


def expected_triangle(meta: GammaMetadata, triple) -> bool:
    """The classification of which triples bound a triangle in gamma systems.

    With the equatorial curve: a mixed pair always does, a same-sign pair
    only when partnered.  Without it: three of a sign always do, a pair
    plus one of the other sign only when the pair is partnered.
    """
    trip = set(triple)
    ups = set(meta.ups)
    if meta.delta in trip:
        a, b = sorted(trip - {meta.delta})
        if (a in ups) != (b in ups):
            return True
        return meta.partners[a] == b
    u = [c for c in trip if c in ups]
    if len(u) in (0, 3):
        return True
    pair = u if len(u) == 2 else [c for c in trip if c not in ups]
    return meta.partners[pair[0]] == pair[1]


def cube_census(system) -> tuple:
    """Multiset of maximal-cube dimensions, the orbit-separating invariant."""
    return tuple(sorted(len(c) for c in maximal_cubes(system).maximal_cubes))


# ---- gamma ----


def test_gamma_basic_shape_g3():
    system, meta = gamma((1, 1, -1))
    assert len(system.curves) == 7
    assert len(vertices(system.map)) == 21
    assert genus(system.map) == 3
    assert system.genus_declared == 3
    assert is_filling(system)
    by_id = {c.id: c for c in system.curves}
    assert by_id[0].role == ROLE_DELTA and by_id[0].name == "d"
    assert by_id[1].role == ROLE_UP and by_id[1].partner == 2
    assert by_id[2].partner == 1
    assert by_id[5].role == ROLE_DOWN and by_id[5].name == "b5"
    assert meta.delta == 0
    assert meta.stations == ((1, 2), (3, 4), (5, 6))
    assert meta.ups == (1, 2, 3, 4)
    assert meta.downs == (5, 6)
    mat = intersection_matrix(system)
    assert all(mat[i][j] == (0 if i == j else 1)
               for i in range(7) for j in range(7))
    assert is_complete_one_system(system)


@pytest.mark.parametrize("eps", all_eps(3))
def test_gamma_all_sign_vectors_g3(eps):
    system, meta = gamma(eps)
    diag = validate_map(system, 3)
    assert diag.ok, diag.violations
    assert is_filling(system, 3)
    n_up_pairs = sum(1 for e in eps if e > 0)
    n_down_pairs = 3 - n_up_pairs
    if n_up_pairs == 0:
        assert meta.up_pencil is None
    else:
        assert len(meta.up_pencil.member_curves) == 2 * n_up_pairs
        assert set(meta.up_pencil.member_curves) == set(meta.ups)
    if n_down_pairs == 0:
        assert meta.down_pencil is None
    else:
        assert len(meta.down_pencil.member_curves) == 2 * n_down_pairs
        assert set(meta.down_pencil.member_curves) == set(meta.downs)


@pytest.mark.parametrize("eps", [
    (1, 1, 1),
    (-1, -1, -1),
    (1, 1, -1),
    (1, -1, -1),
    (1, -1, 1),
])
def test_gamma_triangle_classification_g3(eps):
    system, meta = gamma(eps)
    ids = [c.id for c in system.curves]
    for trip in itertools.combinations(ids, 3):
        assert forms_triangle(system, trip) == expected_triangle(meta, trip), trip


def _rotated_by_one(m1, g: int) -> CombinatorialMap:
    remap = {0: 0}
    for s in range(g):
        for w in (0, 1):
            remap[1 + 2 * s + w] = 1 + 2 * ((s + 1) % g) + w
    return CombinatorialMap(
        sigma=list(m1.sigma),
        alpha=list(m1.alpha),
        curve_of_dart=[remap[c] for c in m1.curve_of_dart],
        face_genus=dict(m1.face_genus),
    )


@pytest.mark.parametrize("eps", [(1, 1, -1), (1, -1, -1), (1, -1, 1, 1, -1)])
def test_gamma_rotation_equivariance_resolved(eps):
    g = len(eps)
    rot = tuple(eps[(s - 1) % g] for s in range(g))
    sys1, _ = gamma(eps)
    sys2, _ = gamma(rot)
    relabeled = _rotated_by_one(sys1.map, g)
    assert maps_isomorphic(relabeled, sys2.map, respect_curves=True)


@pytest.mark.parametrize("eps", [(1, 1, 1), (-1, -1, -1), (1, 1, -1)])
def test_gamma_rotation_equivariance_pencil_form(eps):
    g = len(eps)
    rot = tuple(eps[(s - 1) % g] for s in range(g))
    sys1, _ = gamma(eps, resolve_fans=False)
    sys2, _ = gamma(rot, resolve_fans=False)
    relabeled = _rotated_by_one(sys1.map, g)
    assert maps_isomorphic(relabeled, sys2.map, respect_curves=True)


def test_gamma_pencil_form_shape():
    system, meta = gamma((1, 1, -1), resolve_fans=False)
    assert len(vertices(system.map)) == 6 + 8 + 2
    assert validate_map(system, 3).ok
    mat = intersection_matrix(system)
    assert all(mat[i][j] == (0 if i == j else 1)
               for i in range(7) for j in range(7))
    assert len(meta.up_pencil.member_curves) == 4
    orbit_sizes = sorted(len(o) for o in vertices(system.map))
    assert orbit_sizes.count(8) == 1  # the unresolved four-strand fan


def test_gamma_g5_smoke():
    system, meta = gamma((1, -1, 1, 1, -1))
    assert len(system.curves) == 11
    assert len(vertices(system.map)) == 55
    assert genus(system.map) == 5
    assert is_filling(system)
    assert len(meta.up_pencil.member_curves) == 6
    assert len(meta.down_pencil.member_curves) == 4


def test_gamma_rejects_bad_vectors():
    with pytest.raises(ValueError):
        gamma((1, -1))
    with pytest.raises(ValueError):
        gamma((1, 1, 1, -1))
    with pytest.raises(ValueError):
        gamma((1, 0, 1))
    with pytest.raises(ValueError):
        gamma((1,))


# ---- canonical ----


def test_canonical_torus_matches_resolved_pencil():
    ours = canonical(1)
    reference, _ = perturb_pencil_impl(torus_pencil_three(), 0)
    assert maps_isomorphic(ours.map, reference.map, respect_curves=True)


def test_canonical_genus_two():
    system = canonical(2)
    assert len(system.curves) == 5
    assert len(vertices(system.map)) == 10
    assert genus(system.map) == 2
    assert is_filling(system, 2)
    assert is_complete_one_system(system)
    with pytest.raises(ValueError):
        canonical(0)


# ---- is_filling ----


def test_is_filling_reads_labels_and_genus():
    assert is_filling(torus_square())
    assert not is_filling(parallel_pair_on_torus())
    assert not is_filling(torus_square(), 2)
    with pytest.raises(ValueError):
        is_filling(CurveSystem(torus_square().map, torus_square().curves))


# ---- stabilize ----


def test_stabilize_canonical_two_shape():
    base = canonical(2)
    out = stabilize(base, 0)
    assert len(out.curves) == 7
    assert out.genus_declared == 3
    diag = validate_map(out, 3)
    assert diag.ok, diag.violations
    assert is_filling(out, 3)
    assert is_complete_one_system(out)
    names = {c.name for c in out.curves}
    assert "c0'" in names and "c0''" in names


def test_stabilize_gamma_equatorial_roles():
    base, _ = gamma((1, 1, -1))
    out = stabilize(base, 0)
    assert out.genus_declared == 4
    by_role = {c.role: c for c in out.curves[-2:]}
    assert ROLE_DELTA_PRIME in by_role and ROLE_DELTA_DOUBLE_PRIME in by_role
    assert by_role[ROLE_DELTA_PRIME].name == "d'"


def test_stabilize_triangle_claims():
    base = canonical(2)
    out = stabilize(base, 0)
    old_ids = [c.id for c in base.curves]
    p1, p2 = out.curves[-2].id, out.curves[-1].id
    for beta in old_ids:
        assert forms_triangle(out, (p1, p2, beta)), beta
    for beta in old_ids:
        if beta == 0:
            continue
        assert forms_triangle(out, (beta, 0, p1)), beta
        assert forms_triangle(out, (beta, 0, p2)), beta


def test_stabilize_triangle_claims_hold_at_every_point():
    """The forced triangles do not depend on where the handle is attached."""
    base = canonical(2)
    for cid in range(5):
        tr = trace_curve(base.map, cid)
        arc_count = len(tr) // 2
        for t in (0, arc_count // 2):
            out = stabilize(base, cid, point=tr[2 * t])
            p1, p2 = out.curves[-2].id, out.curves[-1].id
            for beta in (c.id for c in base.curves):
                assert forms_triangle(out, (p1, p2, beta))
                if beta != cid:
                    assert forms_triangle(out, (beta, cid, p1))
                    assert forms_triangle(out, (beta, cid, p2))


def test_stabilize_reaches_gamma_cube_census():
    """Some attachment points land the stabilized system on a sign-vector
    system's maximal-cube census; the handle position genuinely matters,
    so the scan is over all arcs of one curve."""
    gamma_censuses = set()
    for eps in all_eps(3):
        system, _ = gamma(eps)
        gamma_censuses.add(cube_census(system))
    assert len(gamma_censuses) == 2

    base = canonical(2)
    tr = trace_curve(base.map, 0)
    seen = []
    for t in range(len(tr) // 2):
        out = stabilize(base, 0, point=tr[2 * t])
        seen.append(cube_census(out))
    hits = [d for d in seen if d in gamma_censuses]
    assert hits, f"no attachment point matched a sign-vector census: {seen}"


def test_stabilize_guards():
    with pytest.raises(ValueError):
        stabilize(canonical(2), 99)
    with pytest.raises(ValueError):
        stabilize(torus_square(), 0)


def test_stabilize_point_selection():
    base = canonical(2)
    tr = trace_curve(base.map, 1)
    out = stabilize(base, 1, point=tr[2])
    assert out.genus_declared == 3
    assert validate_map(out, 3).ok
    with pytest.raises(ValueError):
        stabilize(base, 1, point=tr[0] + 10**6)
