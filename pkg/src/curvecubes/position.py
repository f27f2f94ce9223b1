"""Face classification and the moves that bring a curve system to minimal position.

Reduction works exclusively through local moves whose effect on the
complement regions is tracked exactly:

* monogon faces and bigon faces certified as disks are removed by pulling
  the strands apart (the symmetric smoothing),
* a pair of curves with excess crossings whose bigon is pierced by other
  curves is first cleared by flipping triangles out of the bigon disk
  (collapse + opposite resolution), which exposes a removable face bigon.

A system is minimal when no pair restriction - including each curve with
itself - contains a monogon or bigon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .surface_map import (
    CombinatorialMap,
    CurveSystem,
    Face,
    MapBuilder,
    RegionLedger,
    RegionTable,
    collapse_triangle_impl,
    face_lookup,
    faces,
    genus,
    intersection_matrix,
    perturb_pencil_impl,
    strand_opposite,
    traversal_next,
    vertex_lookup,
    vertices,
)

# ============================================================
# Classification
# ============================================================


@dataclass
class FaceCensus:
    """Face keys by shape; only disk-certified faces count as removable."""

    monogons: list[int]
    bigons: list[int]
    self_bigons: list[int]
    triangles: list[int]
    others: list[int]


def classify_faces(system: CurveSystem, table: RegionTable | None = None) -> FaceCensus:
    """Sort faces into monogons, bigons, triangles and everything else.

    A face only lands in one of the first three buckets when its whole
    complement region is an embedded disk; 2- or 3-sided faces of non-disk
    regions are classified as other, as are 3-sided faces with a repeated
    side curve.  Bigons whose two sides lie on one curve are flagged
    separately in ``self_bigons`` (and still listed in ``bigons``).
    """
    m = system.map
    if table is None:
        table = RegionTable.from_labels(m)
    census = FaceCensus([], [], [], [], [])
    for f in faces(m):
        disk = table.is_disk_face(f.key)
        if f.sides == 1 and disk:
            census.monogons.append(f.key)
        elif f.sides == 2 and disk:
            census.bigons.append(f.key)
            if f.side_curves[0] == f.side_curves[1]:
                census.self_bigons.append(f.key)
        elif f.sides == 3 and disk and len(set(f.side_curves)) == 3:
            census.triangles.append(f.key)
        else:
            census.others.append(f.key)
    return census


# ============================================================
# Restriction
# ============================================================


def restrict(system: CurveSystem, keep: Iterable[int]) -> CurveSystem:
    """Delete all curves outside ``keep``, healing their crossings.

    Kept curves that lose every crossing receive a marker vertex.  Region
    labels are recomputed so the ambient surface keeps its genus.
    """
    sub, _table, _origin = _restrict(system, keep, RegionTable.from_labels(system.map))
    return sub


def _restrict(
    system: CurveSystem, keep: Iterable[int], table: RegionTable
) -> tuple[CurveSystem, RegionTable, dict[int, int]]:
    m = system.map
    keepset = set(keep)
    roster_ids = {c.id for c in system.curves}
    if not keepset <= roster_ids:
        raise ValueError(f"unknown curves {sorted(keepset - roster_ids)}")
    dropset = roster_ids - keepset
    if not dropset:
        return system.copy(), table, {d: d for d in range(m.num_darts)}

    g = genus(m)
    old_face_of = face_lookup(m)
    ledger = RegionLedger(table)
    b = MapBuilder.from_map(m)

    # one arc glue per deleted edge, one point restore per vertex that
    # disappears entirely; smoothed pass-throughs need no event
    for d in range(m.num_darts):
        if m.curve_of_dart[d] in dropset and d < m.alpha[d]:
            ledger.arc_glue(old_face_of[d], old_face_of[m.alpha[d]])

    stripped: list[int] = []
    for vid in sorted(b.rot):
        orb = list(b.rot[vid])
        gone = [d for d in orb if b.curve[d] in dropset]
        if not gone:
            continue
        if len(gone) == len(orb):
            ledger.point_restore(old_face_of[orb[0]])
            b.delete_vertex_with_darts(vid)
        else:
            for d in gone:
                b.delete_dart(d)
            stripped.append(vid)

    # heal stripped vertices: smooth pass-throughs, keeping one marker per
    # kept curve that ends up crossing-free
    has_anchor: dict[int, bool] = {}
    for vid, orb in b.rot.items():
        if len(orb) >= 4 or (len(orb) == 2 and vid not in stripped):
            for d in orb:
                has_anchor[b.curve[d]] = True
    keep_marker: dict[int, int] = {}
    for vid in stripped:
        if vid not in b.rot:
            continue
        orb = b.rot[vid]
        if len(orb) != 2:
            continue
        p, q = orb
        c = b.curve[p]
        if b.alpha[p] == q:
            continue  # the strand closed onto a single edge here: a marker
        if not has_anchor.get(c, False) and keep_marker.setdefault(c, vid) == vid:
            continue
        b.smooth_valence_two(vid)

    new_map, _o2n, new_to_old = b.finalize()
    new_table = ledger.finish(new_map, new_to_old, old_face_of, expected_genus=g)
    new_map.face_genus = new_table.to_labels(new_map)
    curves = [c for c in system.curves if c.id in keepset]
    pencils = [p for p in system.pencils if set(p.member_curves) <= keepset]
    out = CurveSystem(new_map, curves, pencils, g)
    return out, new_table, new_to_old


# ============================================================
# Monogon removal
# ============================================================


def _remove_monogon(
    system: CurveSystem, table: RegionTable, face_key: int, expected_genus: int
) -> tuple[CurveSystem, RegionTable]:
    m = system.map
    f = next(ff for ff in faces(m) if ff.key == face_key)
    if f.sides != 1 or len(f.darts) != 1:
        raise ValueError(f"face {face_key} is not a plain monogon")
    d = f.darts[0]
    ad = m.alpha[d]
    lk = vertex_lookup(m)
    x = lk[d]
    orb = next(o for o in vertices(m) if min(o) == x)
    if len(orb) != 4:
        raise ValueError(f"monogon corner {x} is not a plain crossing")

    old_face_of = face_lookup(m)
    ledger = RegionLedger(table)
    ledger.arc_glue(old_face_of[d], old_face_of[ad])

    b = MapBuilder.from_map(m)
    t1 = m.sigma[d]
    t2 = m.sigma[t1]
    b.delete_dart(d)
    b.delete_dart(ad)
    if m.alpha[t1] != t2:
        b.smooth_valence_two(b.vertex_of[t1])
    # else: undoing the kink leaves a crossing-free loop; the through edge
    # stays put and the corner becomes its marker

    new_map, _o2n, new_to_old = b.finalize()
    new_table = ledger.finish(new_map, new_to_old, old_face_of, expected_genus=expected_genus)
    new_map.face_genus = new_table.to_labels(new_map)
    return CurveSystem(new_map, list(system.curves), list(system.pencils),
                       system.genus_declared), new_table


# ============================================================
# Bigon removal (pull the strands apart)
# ============================================================


def _stub_chains(
    stubset: set[int], mate: Mapping[int, int], wire: Mapping[int, int]
) -> tuple[list[tuple[list[int], set[int]]], list[set[int]]]:
    """Group the four corner stubs into strand chains.

    Stubs alternate between real edges (``wire``) and the virtual
    reconnections across the removed bigon (``mate``).  Open chains end in
    two real darts; closed cycles are strands that become crossing-free.
    """
    processed: set[int] = set()
    opens: list[tuple[list[int], set[int]]] = []
    cycles: list[set[int]] = []
    for s in sorted(stubset):
        if s in processed:
            continue
        comp = {s}
        ends: list[int] = []
        for start_typ in (0, 1):  # 0: hop over the real edge first
            dd, typ = s, start_typ
            while True:
                nxt = wire[dd] if typ == 0 else mate[dd]
                if nxt in stubset:
                    if nxt in comp:
                        break
                    comp.add(nxt)
                    dd, typ = nxt, 1 - typ
                else:
                    ends.append(nxt)
                    break
        processed |= comp
        if len(ends) == 2:
            opens.append((ends, comp))
        elif not ends:
            cycles.append(comp)
        else:
            raise AssertionError("stub chain with one loose end")
    return opens, cycles


def _remove_face_bigon(
    system: CurveSystem, table: RegionTable, face_key: int, expected_genus: int
) -> tuple[CurveSystem, RegionTable]:
    m = system.map
    f = next(ff for ff in faces(m) if ff.key == face_key)
    if f.sides != 2 or len(f.darts) != 2:
        raise ValueError(f"face {face_key} is not a plain bigon")
    t_a, t_b = f.darts
    lk = vertex_lookup(m)
    if lk[t_a] == lk[t_b]:
        raise ValueError(f"bigon {face_key} is pinched at one vertex")
    if m.sigma[m.alpha[t_b]] != t_a or m.sigma[m.alpha[t_a]] != t_b:
        raise AssertionError("bigon corners out of joint")

    # the four outer stubs, paired by the strand surviving through each corner
    s_ax = strand_opposite(m, t_a)
    s_ay = strand_opposite(m, m.alpha[t_a])
    s_bx = strand_opposite(m, m.alpha[t_b])
    s_by = strand_opposite(m, t_b)
    mate = {s_ax: s_ay, s_ay: s_ax, s_bx: s_by, s_by: s_bx}
    stubset = set(mate)
    if len(stubset) != 4:
        raise AssertionError("bigon corner stubs overlap")
    wire = {s: m.alpha[s] for s in stubset}

    # separating the strands opens a corridor from the bigon through each
    # corner into the face across it (the sector opposite the bigon)
    old_face_of = face_lookup(m)
    ledger = RegionLedger(table)
    ledger.arc_glue(old_face_of[t_a], old_face_of[s_ax])
    ledger.arc_glue(old_face_of[t_a], old_face_of[s_by])

    b = MapBuilder.from_map(m)
    for d in (t_a, m.alpha[t_a], t_b, m.alpha[t_b]):
        b.delete_dart(d)

    opens, cycles = _stub_chains(stubset, mate, wire)
    for ends, comp in opens:
        for s in comp:
            b.delete_dart(s)
        b.link(ends[0], ends[1])
    for comp in cycles:
        real_edges = sorted((d, wire[d]) for d in comp if wire[d] in comp and d < wire[d])
        # prefer a marker edge away from the corridor mouths, so the glued
        # regions end up on the correct banks of the surviving loop
        free = [e for e in real_edges if s_ax not in e and s_by not in e]
        keep_u, keep_v = free[0] if free else real_edges[0]
        for (du, dv) in real_edges:
            if (du, dv) == (keep_u, keep_v):
                continue
            # a crossing-free strand contracts over this edge: its banks
            # rejoin around the vanished loop
            ledger.arc_glue(old_face_of[du], old_face_of[dv])
            ledger.point_restore(old_face_of[du])
        for s in comp:
            if s not in (keep_u, keep_v):
                b.delete_dart(s)
        for s in (keep_u, keep_v):
            vid = b.vertex_of.pop(s)
            b.rot[vid].remove(s)
            if not b.rot[vid]:
                del b.rot[vid]
        b.new_vertex([keep_u, keep_v])

    new_map, _o2n, new_to_old = b.finalize()
    new_table = ledger.finish(new_map, new_to_old, old_face_of, expected_genus=expected_genus)
    new_map.face_genus = new_table.to_labels(new_map)
    return CurveSystem(new_map, list(system.curves), list(system.pencils),
                       system.genus_declared), new_table


def remove_bigon(system: CurveSystem, face_key: int) -> CurveSystem:
    """Remove a bigon face by pulling its two strands apart.

    The face must be a 2-sided disk face with single-edge sides and
    distinct corner crossings.  The two strands lose exactly the two
    corner crossings; every other crossing - including those of curves
    passing elsewhere - is preserved.  Bigons between a curve and itself
    are legal and reported by ``classify_faces`` as self-bigons.
    """
    g = genus(system.map)
    table = RegionTable.from_labels(system.map)
    census = classify_faces(system, table)
    if face_key not in census.bigons:
        raise ValueError(f"face {face_key} is not a removable bigon")
    before = sum(sum(r) for r in intersection_matrix(system))
    out, _ = _remove_face_bigon(system, table, face_key, g)
    after = sum(sum(r) for r in intersection_matrix(out))
    if before - after not in (2, 4):
        raise AssertionError("bigon removal changed an unexpected crossing count")
    return out


# ============================================================
# Reidemeister III
# ============================================================


def _r3(
    system: CurveSystem, face_key: int, table: RegionTable
) -> tuple[CurveSystem, RegionTable]:
    mid, o2n_collapse, vkey = collapse_triangle_impl(system, face_key)
    out, o2n_perturb = perturb_pencil_impl(
        mid, vkey, _signed_delta=-Fraction(1, 64 * 9))
    out.pencils = out.pencils[:-1]  # the move leaves no pencil record behind

    # compose the two dart maps over darts surviving from the original
    final_to_orig: dict[int, int] = {}
    for d_orig, d_mid in o2n_collapse.items():
        if d_orig >= system.map.num_darts:
            continue  # builder-created pencil darts
        d_out = o2n_perturb.get(d_mid)
        if d_out is not None:
            final_to_orig[d_out] = d_orig

    old_face_of = face_lookup(system.map)
    grouped: dict[object, list[int]] = {}
    chi_of: dict[object, int] = {}
    fresh_seq = 0
    for f in faces(out.map):
        regions = set()
        for d in f.darts:
            o = final_to_orig.get(d)
            if o is not None:
                regions.add(table.region_of_face[old_face_of[o]])
        if not regions:
            rid: object = ("fresh", fresh_seq)
            fresh_seq += 1
            grouped[rid] = [f.key]
            chi_of[rid] = 1
        else:
            if len(regions) > 1:
                raise AssertionError(f"triangle flip mixed regions {sorted(regions)}")
            rid = regions.pop()
            grouped.setdefault(rid, []).append(f.key)
            chi_of[rid] = table.chi[rid]
    region_of_face: dict[int, int] = {}
    chi: dict[int, int] = {}
    for rid, fks in grouped.items():
        new_id = min(fks)
        chi[new_id] = chi_of[rid]
        for fk in fks:
            region_of_face[fk] = new_id
    new_table = RegionTable(region_of_face, chi)
    nv = len(vertices(out.map))
    ne = out.map.num_darts // 2
    if nv - ne + new_table.total_chi() != 2 - 2 * genus(system.map):
        raise AssertionError("triangle flip broke the region account")
    out.map.face_genus = new_table.to_labels(out.map)
    return out, new_table


def reidemeister_iii(system: CurveSystem, face_key: int) -> CurveSystem:
    """Flip a triangle: collapse it and resolve the pencil the opposite way.

    The face must be a triangular disk face with three distinct side
    curves.  All pairwise crossing counts are preserved; flipping the
    resulting triangle again returns an isomorphic map.
    """
    table = RegionTable.from_labels(system.map)
    census = classify_faces(system, table)
    if face_key not in census.triangles:
        raise ValueError(f"face {face_key} is not a flippable triangle")
    out, _ = _r3(system, face_key, table)
    return out


# ============================================================
# Pair-level bigon detection
# ============================================================


@dataclass
class _ExposureZone:
    """An innermost pair bigon (or pierced self-monogon) in the full diagram."""

    kind: str                    # "bigon" | "monogon"
    curves: tuple[int, ...]
    corners: tuple[int, ...]     # vertex keys in the full map
    seed_darts: tuple[int, ...]  # forward departure darts at the corners
    side_edges: set[int] = field(default_factory=set)
    sort_key: tuple = ()
    through_total: int = 0


def _walk_side(m: CombinatorialMap, start_dart: int, end_vertex: int,
               lk: Mapping[int, int]) -> tuple[list[int], list[int]]:
    """Follow a curve from ``start_dart`` until arriving at ``end_vertex``;
    returns (departure darts of the arc, intermediate vertex keys)."""
    darts = [start_dart]
    inter: list[int] = []
    d = start_dart
    for _ in range(m.num_darts + 1):
        v = lk[m.alpha[d]]
        if v == end_vertex:
            return darts, inter
        inter.append(v)
        d = traversal_next(m, d)
        darts.append(d)
    raise AssertionError("side walk did not terminate")


def _through_exit(m: CombinatorialMap, gin: int, stops: set[int],
                  lk: Mapping[int, int]) -> int:
    """First vertex of ``stops`` met when walking into the disk via ``gin``."""
    d = gin
    for _ in range(m.num_darts + 1):
        w = lk[m.alpha[d]]
        if w in stops:
            return w
        d = traversal_next(m, d)
    raise AssertionError("through arc never left the disk")


def _zone_candidates(system: CurveSystem, table: RegionTable) -> list[_ExposureZone]:
    """Innermost pair-level bigons and pierced self-monogons, sorted."""
    m = system.map
    lk = vertex_lookup(m)
    out: list[_ExposureZone] = []
    ids = system.curve_ids()
    mat = intersection_matrix(system)
    pos = {cid: i for i, cid in enumerate(ids)}

    for a in ids:
        if mat[pos[a]][pos[a]] == 0:
            continue
        sub, subtab, origin = _restrict(system, {a}, table)
        for f in faces(sub.map):
            if f.sides != 1 or len(f.darts) != 1 or not subtab.is_disk_face(f.key):
                continue
            d0 = origin[f.darts[0]]
            x = lk[d0]
            loop_darts, inter = _walk_side(m, d0, x, lk)
            if not inter:
                continue  # a clean monogon face, handled directly
            side = set()
            for d in loop_darts:
                side.add(d)
                side.add(m.alpha[d])
            out.append(_ExposureZone("monogon", (a,), (x,), (d0,), side,
                                     (1, x, x, a, a), len(inter)))

    for i, a in enumerate(ids):
        for bc in ids[i:]:
            if mat[pos[a]][pos[bc]] < 2:
                continue
            sub, subtab, origin = _restrict(system, {a, bc}, table)
            sub_lk = vertex_lookup(sub.map)
            for f in faces(sub.map):
                if f.sides != 2 or len(f.darts) != 2 or not subtab.is_disk_face(f.key):
                    continue
                t1, t2 = f.darts
                if sub_lk[t1] == sub_lk[t2]:
                    continue  # pinched: the excess surfaces elsewhere
                f0, g0 = origin[t1], origin[t2]
                x, y = lk[f0], lk[g0]
                if x == y:
                    continue
                side_a, inter_a = _walk_side(m, f0, y, lk)
                side_b, inter_b = _walk_side(m, g0, x, lk)
                if m.sigma[m.alpha[side_a[-1]]] != g0 or m.sigma[m.alpha[side_b[-1]]] != f0:
                    raise AssertionError("pair bigon corners out of joint")
                set_a, set_b = set(inter_a), set(inter_b)
                stops = set_a | set_b | {x, y}
                innermost = True
                for fw in side_a[1:] + side_b[1:]:
                    came = lk[fw]
                    gin = m.sigma[m.sigma[m.sigma[fw]]]
                    w = _through_exit(m, gin, stops, lk)
                    if w in (x, y):
                        raise AssertionError("through arc hit a bigon corner")
                    if (came in set_a) == (w in set_a):
                        innermost = False
                        break
                if not innermost:
                    continue
                side = set()
                for d in side_a + side_b:
                    side.add(d)
                    side.add(m.alpha[d])
                out.append(_ExposureZone(
                    "bigon", (a, bc), (min(x, y), max(x, y)), (f0, g0), side,
                    (0, min(x, y), max(x, y), a, bc), len(inter_a) + len(inter_b)))
    out.sort(key=lambda z: z.sort_key)
    return out


def _inside_faces(m: CombinatorialMap, zone: _ExposureZone,
                  face_list: list[Face]) -> set[int]:
    """Faces strictly inside the zone's disk: flood fill from the interior
    corner faces, never crossing a side edge."""
    face_of = face_lookup(m)
    by_key = {f.key: f for f in face_list}
    inside: set[int] = set()
    stack = [face_of[d] for d in zone.seed_darts]
    while stack:
        k = stack.pop()
        if k in inside:
            continue
        inside.add(k)
        for d in by_key[k].darts:
            if d in zone.side_edges:
                continue
            nb = face_of[m.alpha[d]]
            if nb not in inside:
                stack.append(nb)
    return inside


# ============================================================
# Reduction
# ============================================================


def reduce(system: CurveSystem, table: RegionTable | None = None) -> CurveSystem:
    """Bring a system to minimal position.

    Removes monogons and bigons - with triangle flips to clear through-arcs
    off pierced ones - until no pair of curves (nor any curve with itself)
    bounds one.  The output realizes every pairwise geometric intersection
    number and has no monogon or bigon faces.

    Face labels determine complement regions one face at a time, so when a
    single region meets the curves along several faces (an annulus between
    disjoint curves, say) the labels alone under-determine the picture; pass
    the true ``table`` in that case.
    """
    if table is None:
        table = RegionTable.from_labels(system.map)
    out, _ = _reduce(system, table)
    return out


def _reduce(system: CurveSystem, table: RegionTable) -> tuple[CurveSystem, RegionTable]:
    g = genus(system.map)
    cur, tab = system, table
    crossings = sum(1 for o in vertices(cur.map) if len(o) >= 4)
    budget = 40 * (crossings + 4) ** 2 + 200
    steps = 0
    while True:
        steps += 1
        if steps > budget:
            raise AssertionError("reduction exceeded its move budget")
        m = cur.map
        face_list = faces(m)
        lk = vertex_lookup(m)
        val = {min(o): len(o) for o in vertices(m)}
        census = classify_faces(cur, tab)
        moved = False
        for k in census.monogons:
            f = next(ff for ff in face_list if ff.key == k)
            if len(f.darts) == 1 and val[lk[f.darts[0]]] == 4:
                cur, tab = _remove_monogon(cur, tab, k, g)
                moved = True
                break
        if moved:
            continue
        for k in census.bigons:
            f = next(ff for ff in face_list if ff.key == k)
            if len(f.darts) == 2 and lk[f.darts[0]] != lk[f.darts[1]]:
                cur, tab = _remove_face_bigon(cur, tab, k, g)
                moved = True
                break
        if moved:
            continue
        zones = _zone_candidates(cur, tab)
        if not zones:
            break
        cur, tab = _expose(cur, tab, zones[0], face_list, census)
    if genus(cur.map) != g:
        raise AssertionError("reduction changed the ambient genus")
    return cur, tab


def _expose(system: CurveSystem, table: RegionTable, zone: _ExposureZone,
            face_list: list[Face], census: FaceCensus) -> tuple[CurveSystem, RegionTable]:
    """Flip one triangle out of a pierced zone to make progress."""
    m = system.map
    lk = vertex_lookup(m)
    inside = _inside_faces(m, zone, face_list)
    tris = [k for k in census.triangles if k in inside]
    if not tris:
        raise AssertionError(
            f"pierced {zone.kind} on curves {zone.curves} admits no triangle flip")
    by_key = {f.key: f for f in face_list}
    corner_set = set(zone.corners)
    zone_curves = set(zone.curves)

    def priority(k: int) -> tuple:
        f = by_key[k]
        corner_hit = any(lk[d] in corner_set for d in f.darts)
        side_hit = len(set(f.side_curves) & zone_curves)
        return (0 if corner_hit else 1, -side_hit, k)

    tris.sort(key=priority)
    return _r3(system, tris[0], table)


# ============================================================
# Triangle formation
# ============================================================


def forms_triangle(system: CurveSystem, triple: Iterable[int]) -> bool:
    """Whether three curves bound a triangle once put in minimal position.

    Restricts to the triple, reduces, and looks for a triangular disk face
    with the three curves as sides.  The verdict depends only on the
    homotopy classes, so any realization of the same system answers the
    same way.
    """
    trip = sorted(set(triple))
    if len(trip) != 3:
        raise ValueError(f"need three distinct curves, got {sorted(set(triple))}")
    table = RegionTable.from_labels(system.map)
    sub, subtab, _ = _restrict(system, trip, table)
    red, redtab = _reduce(sub, subtab)
    census = classify_faces(red, redtab)
    want = set(trip)
    for k in census.triangles:
        f = next(ff for ff in faces(red.map) if ff.key == k)
        if set(f.side_curves) == want:
            return True
    return False
