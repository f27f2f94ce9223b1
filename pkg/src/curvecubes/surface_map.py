"""Dart-based combinatorial maps encoding curve systems on oriented surfaces.

A map is a pair of permutations on darts 0..2E-1: ``sigma`` rotates the darts
counterclockwise around their vertex and ``alpha`` is the fixed-point-free
involution pairing the two darts of each edge.  Faces are the orbits of
``phi = sigma o alpha``.  Vertices of valence 4 are transverse crossings,
valence-2 vertices are markers (placeholders on crossing-free curves), and
valence 2k >= 6 vertices are pencils: k strands meeting at a point, legal
only in almost-realizations.

Complement regions that are not disks are recorded through ``face_genus``
labels: the Euler relation V - E + sum_f (1 - 2*label_f) = 2 - 2g holds for
the genus g of the ambient surface.  A region with b boundary circles and
genus gamma contributes chi = 2 - 2*gamma - b, carried as a total label of
(b - chi)/2 distributed onto the region's lowest face key.  Reloading a file
therefore reads each positively-labeled face as a standalone region; systems
emitted by the generators are filling, so every label is 0 and nothing is
lost in a round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

# ============================================================
# Roles
# ============================================================

ROLE_UP = "Up"
ROLE_DOWN = "Down"
ROLE_DELTA = "Delta"
ROLE_DELTA_PRIME = "DeltaPrime"
ROLE_DELTA_DOUBLE_PRIME = "DeltaDoublePrime"
ROLE_PLAIN = "Plain"

ALL_ROLES = (
    ROLE_UP,
    ROLE_DOWN,
    ROLE_DELTA,
    ROLE_DELTA_PRIME,
    ROLE_DELTA_DOUBLE_PRIME,
    ROLE_PLAIN,
)

SIDE_UP = "UpPencil"
SIDE_DOWN = "DownPencil"
SIDE_GENERIC = "Pencil"


# ============================================================
# Core data types
# ============================================================


@dataclass(frozen=True)
class Curve:
    """Roster entry for one closed curve of a system."""

    id: int
    name: str
    role: str = ROLE_PLAIN
    partner: int | None = None


@dataclass(frozen=True)
class PencilDisk:
    """Record of a resolved (or abstract) pencil of pairwise-crossing strands.

    ``boundary_order`` lists, counterclockwise around the disk, which curve
    each boundary point belongs to and which of the curve's two passages
    through the disk it is ("s1" or "s2").
    """

    member_curves: tuple[int, ...]
    boundary_order: tuple[tuple[int, str], ...]
    side: str = SIDE_GENERIC


@dataclass
class CombinatorialMap:
    """Rotation system: sigma (CCW vertex rotation) and alpha (edge pairing)."""

    sigma: list[int]
    alpha: list[int]
    curve_of_dart: list[int]
    face_genus: dict[int, int] = field(default_factory=dict)

    @property
    def num_darts(self) -> int:
        return len(self.sigma)

    def copy(self) -> "CombinatorialMap":
        return CombinatorialMap(
            list(self.sigma),
            list(self.alpha),
            list(self.curve_of_dart),
            dict(self.face_genus),
        )


@dataclass
class CurveSystem:
    """A combinatorial map together with its curve roster and pencil records."""

    map: CombinatorialMap
    curves: list[Curve]
    pencils: list[PencilDisk] = field(default_factory=list)
    genus_declared: int | None = None

    def curve_by_id(self, cid: int) -> Curve:
        for c in self.curves:
            if c.id == cid:
                return c
        raise KeyError(f"no curve with id {cid}")

    def curve_ids(self) -> list[int]:
        return [c.id for c in self.curves]

    def copy(self) -> "CurveSystem":
        return CurveSystem(
            self.map.copy(),
            list(self.curves),
            list(self.pencils),
            self.genus_declared,
        )


@dataclass(frozen=True)
class Face:
    """One face of a map: its phi-orbit, side count and side curves.

    ``sides`` counts boundary arcs between genuine corners (valence >= 4);
    marker vertices do not break a side.  ``genus_label`` is the face's
    entry in the map's Euler labeling (0 for plain disk faces).
    """

    key: int
    darts: tuple[int, ...]
    sides: int
    side_curves: tuple[int, ...]
    genus_label: int


# ============================================================
# Orbit helpers
# ============================================================


def _orbits(perm: Sequence[int]) -> list[list[int]]:
    seen = [False] * len(perm)
    out: list[list[int]] = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        orb = []
        d = start
        while not seen[d]:
            seen[d] = True
            orb.append(d)
            d = perm[d]
        out.append(orb)
    return out


def vertices(m: CombinatorialMap) -> list[list[int]]:
    """Sigma-orbits (each starting at its minimal dart), sorted by key."""
    orbs = _orbits(m.sigma)
    keyed = []
    for orb in orbs:
        k = min(orb)
        i = orb.index(k)
        keyed.append(orb[i:] + orb[:i])
    keyed.sort(key=lambda o: o[0])
    return keyed


def vertex_lookup(m: CombinatorialMap) -> dict[int, int]:
    """Map each dart to the key (minimal dart) of its vertex."""
    lk: dict[int, int] = {}
    for orb in _orbits(m.sigma):
        k = min(orb)
        for d in orb:
            lk[d] = k
    return lk


def valences(m: CombinatorialMap) -> dict[int, int]:
    return {min(orb): len(orb) for orb in _orbits(m.sigma)}


def sigma_power(m: CombinatorialMap, d: int, p: int) -> int:
    for _ in range(p):
        d = m.sigma[d]
    return d


def strand_opposite(m: CombinatorialMap, d: int, valence_of: Mapping[int, int] | None = None,
                    lookup: Mapping[int, int] | None = None) -> int:
    """The dart opposite ``d`` at its vertex (same strand, other direction)."""
    if lookup is None or valence_of is None:
        orb = [d]
        e = m.sigma[d]
        while e != d:
            orb.append(e)
            e = m.sigma[e]
        v = len(orb)
        return orb[v // 2]
    v = valence_of[lookup[d]]
    return sigma_power(m, d, v // 2)


def traversal_next(m: CombinatorialMap, d: int) -> int:
    """Next departure dart when a curve leaves along ``d`` and crosses through."""
    return strand_opposite(m, m.alpha[d])


def faces(m: CombinatorialMap) -> list[Face]:
    """Faces as phi-orbits, phi(d) = sigma(alpha(d)), keyed by minimal dart."""
    phi = [m.sigma[m.alpha[d]] for d in range(m.num_darts)]
    val = valences(m)
    lk = vertex_lookup(m)
    out = []
    for orb in _orbits(phi):
        k = min(orb)
        i = orb.index(k)
        orb = orb[i:] + orb[:i]
        corner_positions = [j for j, d in enumerate(orb) if val[lk[d]] >= 4]
        sides = len(corner_positions)
        if sides == 0:
            side_curves: tuple[int, ...] = (m.curve_of_dart[orb[0]],)
        else:
            # one side per genuine corner: the arc beginning at that corner
            side_curves = tuple(m.curve_of_dart[orb[j]] for j in corner_positions)
        out.append(Face(k, tuple(orb), sides, side_curves, m.face_genus.get(k, 0)))
    out.sort(key=lambda f: f.key)
    return out


def face_lookup(m: CombinatorialMap) -> dict[int, int]:
    """Map each dart to the key of its face."""
    phi = [m.sigma[m.alpha[d]] for d in range(m.num_darts)]
    lk: dict[int, int] = {}
    for orb in _orbits(phi):
        k = min(orb)
        for d in orb:
            lk[d] = k
    return lk


def genus(m: CombinatorialMap) -> int:
    """Genus of the ambient surface from the labeled Euler relation.

    Raises ValueError when the relation gives a non-integer or negative
    genus (the labeling is then inconsistent with the rotation system).
    """
    v = len(_orbits(m.sigma))
    e = m.num_darts // 2
    label_sum = 0
    nfaces = 0
    for f in faces(m):
        nfaces += 1
        label_sum += m.face_genus.get(f.key, 0)
    chi = v - e + nfaces - 2 * label_sum
    g2 = 2 - chi
    if g2 % 2 != 0:
        raise ValueError(f"Euler relation gives odd 2g = {g2}")
    g = g2 // 2
    if g < 0:
        raise ValueError(f"Euler relation gives negative genus {g}")
    return g


def trace_curve(m: CombinatorialMap, curve: int) -> list[int]:
    """Closed trace of a curve: alternating departure/arrival darts.

    Starts at the curve's minimal dart and walks forward (straight through
    every vertex), emitting for each edge passage the departure dart and its
    arrival partner.  A curve passing k vertices yields a trace of length 2k.
    """
    try:
        start = min(d for d in range(m.num_darts) if m.curve_of_dart[d] == curve)
    except ValueError:
        raise ValueError(f"curve {curve} has no darts") from None
    out = []
    d = start
    while True:
        out.append(d)
        out.append(m.alpha[d])
        d = traversal_next(m, d)
        if d == start:
            break
        if len(out) > 2 * m.num_darts:
            raise ValueError(f"trace of curve {curve} does not close")
    return out


def intersection_matrix(system: CurveSystem) -> list[list[int]]:
    """Crossing counts per curve pair; the diagonal counts self-crossings.

    Every pair of strands through a pencil vertex contributes one crossing,
    matching what resolving the pencil produces.
    """
    m = system.map
    ids = system.curve_ids()
    index = {cid: i for i, cid in enumerate(ids)}
    n = len(ids)
    mat = [[0] * n for _ in range(n)]
    for orb in vertices(m):
        v = len(orb)
        if v < 4:
            continue
        k = v // 2
        strands = [m.curve_of_dart[orb[i]] for i in range(k)]
        for i in range(k):
            for j in range(i + 1, k):
                a, b = index[strands[i]], index[strands[j]]
                if a == b:
                    mat[a][a] += 1
                else:
                    mat[a][b] += 1
                    mat[b][a] += 1
    return mat


# ============================================================
# Validation
# ============================================================


@dataclass
class Diagnostics:
    ok: bool
    violations: list[str]
    genus: int | None
    notes: list[str]


def validate_map(system: CurveSystem | CombinatorialMap,
                 genus_declared: int | None = None) -> Diagnostics:
    """Check structural invariants, reporting violations instead of raising.

    Verifies that sigma is a permutation and alpha a fixed-point-free
    involution, that all valences are even, that strands pair curves
    consistently, that every curve's traversal closes up, and that the
    labeled Euler relation yields the declared genus.  Pencil vertices
    (valence >= 6) are legal but noted, since they only belong in
    almost-realizations.
    """
    if isinstance(system, CurveSystem):
        m = system.map
        roster: list[Curve] | None = system.curves
        if genus_declared is None:
            genus_declared = system.genus_declared
    else:
        m = system
        roster = None

    bad: list[str] = []
    notes: list[str] = []
    n = m.num_darts

    if len(m.alpha) != n or len(m.curve_of_dart) != n:
        bad.append("sigma/alpha/curve_of_dart length mismatch")
        return Diagnostics(False, bad, None, notes)
    if n % 2 != 0:
        bad.append(f"odd number of darts {n}")
    if sorted(m.sigma) != list(range(n)):
        bad.append("sigma is not a permutation")
        return Diagnostics(False, bad, None, notes)
    for d in range(n):
        a = m.alpha[d]
        if not (0 <= a < n) or m.alpha[a] != d:
            bad.append(f"alpha is not an involution at dart {d}")
            return Diagnostics(False, bad, None, notes)
        if a == d:
            bad.append(f"alpha fixes dart {d}")
    for d in range(n):
        if m.curve_of_dart[d] != m.curve_of_dart[m.alpha[d]]:
            bad.append(f"edge {{{d},{m.alpha[d]}}} changes curve")

    has_pencil = False
    for orb in vertices(m):
        v = len(orb)
        if v % 2 != 0:
            bad.append(f"vertex {orb[0]} has odd valence {v}")
            continue
        if v >= 6:
            has_pencil = True
        k = v // 2
        for i in range(k):
            c1 = m.curve_of_dart[orb[i]]
            c2 = m.curve_of_dart[orb[i + k]]
            if c1 != c2:
                bad.append(
                    f"vertex {orb[0]}: opposite darts {orb[i]},{orb[i+k]} "
                    f"lie on different curves ({c1} vs {c2})"
                )
    if has_pencil:
        notes.append("map contains pencil vertices (almost-realization)")

    if not bad:
        seen_curves = set()
        d_seen = set()
        for d in range(n):
            if d in d_seen:
                continue
            c = m.curve_of_dart[d]
            e = d
            while e not in d_seen:
                d_seen.add(e)
                d_seen.add(m.alpha[e])
                if m.curve_of_dart[e] != c:
                    bad.append(f"traversal from dart {d} changes curve")
                    break
                e = traversal_next(m, e)
            seen_curves.add(c)
        if roster is not None:
            roster_ids = {c.id for c in roster}
            if seen_curves - roster_ids:
                bad.append(f"darts reference unknown curves {sorted(seen_curves - roster_ids)}")
            for c in roster:
                if c.role not in ALL_ROLES:
                    bad.append(f"curve {c.id} has unknown role {c.role!r}")
                if c.partner is not None:
                    try:
                        p = next(x for x in roster if x.id == c.partner)
                    except StopIteration:
                        bad.append(f"curve {c.id} has missing partner {c.partner}")
                    else:
                        if p.partner != c.id:
                            bad.append(f"partner mapping is not an involution at curve {c.id}")

    g: int | None = None
    if not bad:
        fkeys = {f.key for f in faces(m)}
        for k in m.face_genus:
            if k not in fkeys:
                bad.append(f"face_genus key {k} is not a face key")
            elif m.face_genus[k] < 0:
                bad.append(f"face_genus[{k}] is negative")
        try:
            g = genus(m)
        except ValueError as exc:
            bad.append(str(exc))
        if g is not None and genus_declared is not None and g != genus_declared:
            bad.append(f"declared genus {genus_declared} but Euler relation gives {g}")

    return Diagnostics(not bad, bad, g, notes)


# ============================================================
# Region bookkeeping
# ============================================================


@dataclass
class RegionTable:
    """Partition of faces into complement regions, with chi per region."""

    region_of_face: dict[int, int]
    chi: dict[int, int]

    @classmethod
    def from_labels(cls, m: CombinatorialMap) -> "RegionTable":
        """Read each face as its own region: chi = 1 - 2*label."""
        rof = {}
        chi = {}
        for f in faces(m):
            rof[f.key] = f.key
            chi[f.key] = 1 - 2 * m.face_genus.get(f.key, 0)
        return cls(rof, chi)

    def faces_of(self, region: int) -> list[int]:
        return sorted(k for k, r in self.region_of_face.items() if r == region)

    def is_disk_face(self, face_key: int) -> bool:
        """True when the face's whole region is an embedded disk."""
        r = self.region_of_face[face_key]
        if self.chi[r] != 1:
            return False
        return len(self.faces_of(r)) == 1

    def to_labels(self, m: CombinatorialMap) -> dict[int, int]:
        """Distribute each region's label total onto its lowest face key."""
        labels: dict[int, int] = {}
        regions: dict[int, list[int]] = {}
        for fk, r in self.region_of_face.items():
            regions.setdefault(r, []).append(fk)
        for r, fks in regions.items():
            b = len(fks)
            chi = self.chi[r]
            if (b - chi) % 2 != 0:
                raise ValueError(f"region {r}: boundary count {b} and chi {chi} have unequal parity")
            total = (b - chi) // 2
            if total < 0:
                raise ValueError(f"region {r}: negative label total {total}")
            if total:
                labels[min(fks)] = total
        return labels

    def total_chi(self) -> int:
        return sum(self.chi.values())


class RegionLedger:
    """Tracks how complement regions merge and split through a surgery.

    Old faces are glued with union-find as their separating edges are
    deleted (``arc_glue`` per deleted edge, ``point_restore`` per deleted
    vertex); freshly cut disk pieces are declared explicitly.  ``finish``
    assigns every face of the new map to a region and checks the global
    Euler relation.
    """

    def __init__(self, table: RegionTable):
        self._parent: dict[int, int] = {fk: fk for fk in table.region_of_face}
        self._chi: dict[int, int] = {}
        self._table = table
        # chi initially lives on region representatives; move it onto the
        # union-find roots of each region's faces by pre-merging regions.
        by_region: dict[int, list[int]] = {}
        for fk, r in table.region_of_face.items():
            by_region.setdefault(r, []).append(fk)
        for r, fks in by_region.items():
            root = fks[0]
            for other in fks[1:]:
                self._parent[self._find(other)] = self._find(root)
            self._chi[self._find(root)] = table.chi[r]
        self._fresh: list[int] = []  # fresh disk region tags (negative)
        self._next_fresh = -1

    def _find(self, x: int) -> int:
        while self._parent[x] != x:
            self._parent[x] = self._parent[self._parent[x]]
            x = self._parent[x]
        return x

    def arc_glue(self, face_a: int, face_b: int) -> None:
        ra, rb = self._find(face_a), self._find(face_b)
        if ra == rb:
            self._chi[ra] -= 1
        else:
            c = self._chi.pop(ra) + self._chi.pop(rb) - 1
            self._parent[rb] = ra
            self._chi[self._find(ra)] = c

    def circle_glue(self, face_a: int, face_b: int) -> None:
        ra, rb = self._find(face_a), self._find(face_b)
        if ra != rb:
            c = self._chi.pop(ra) + self._chi.pop(rb)
            self._parent[rb] = ra
            self._chi[self._find(ra)] = c

    def point_restore(self, face_near: int) -> None:
        self._chi[self._find(face_near)] += 1

    def fresh_disk(self) -> int:
        tag = self._next_fresh
        self._next_fresh -= 1
        self._fresh.append(tag)
        return tag

    def finish(
        self,
        new_map: CombinatorialMap,
        dart_origin: Mapping[int, int],
        old_face_of_dart: Mapping[int, int],
        overrides: Mapping[int, int] | None = None,
        expected_genus: int | None = None,
    ) -> RegionTable:
        """Assign regions to the new map's faces.

        ``dart_origin`` maps new dart ids to old dart ids for surviving
        darts; ``overrides`` maps a new dart to a fresh-disk tag, forcing
        the face containing it into that region (used for pieces cut off a
        region by newly drawn arcs).
        """
        overrides = overrides or {}
        new_faces = faces(new_map)
        rof: dict[int, int] = {}
        chi: dict[int, int] = {}
        fresh_chi: dict[int, int] = {t: 1 for t in self._fresh}
        for f in new_faces:
            tag: int | None = None
            for d in f.darts:
                if d in overrides:
                    if tag is not None and tag != overrides[d]:
                        raise AssertionError(f"conflicting region overrides in face {f.key}")
                    tag = overrides[d]
            if tag is not None:
                rof[f.key] = tag
                chi[tag] = fresh_chi[tag]
                continue
            roots = set()
            for d in f.darts:
                od = dart_origin.get(d)
                if od is None:
                    continue
                ofk = old_face_of_dart.get(od)
                if ofk is not None:
                    roots.add(self._find(ofk))
            if not roots:
                raise AssertionError(f"face {f.key} of the new map has no region ancestry")
            if len(roots) > 1:
                raise AssertionError(f"face {f.key} inherits from several regions {sorted(roots)}")
            root = roots.pop()
            rof[f.key] = root
            chi[root] = self._chi[root]
        # compact region ids to the minimal face key of each region
        remap: dict[int, int] = {}
        by_region: dict[int, list[int]] = {}
        for fk, r in rof.items():
            by_region.setdefault(r, []).append(fk)
        for r, fks in by_region.items():
            remap[r] = min(fks)
        table = RegionTable(
            {fk: remap[r] for fk, r in rof.items()},
            {remap[r]: chi[r] for r in by_region},
        )
        if expected_genus is not None:
            v = len(_orbits(new_map.sigma))
            e = new_map.num_darts // 2
            if (v - e) + table.total_chi() != 2 - 2 * expected_genus:
                raise AssertionError(
                    "region ledger out of balance: "
                    f"(V-E)={v-e}, sum chi={table.total_chi()}, genus {expected_genus}"
                )
        return table


# ============================================================
# Mutable builder for surgeries
# ============================================================


class MapBuilder:
    """Dart-level editor: stable ids while edits happen, compacted on finalize."""

    def __init__(self) -> None:
        self.alpha: dict[int, int] = {}
        self.curve: dict[int, int] = {}
        self.vertex_of: dict[int, int] = {}
        self.rot: dict[int, list[int]] = {}
        self._next_dart = 0
        self._next_vertex = 0

    @classmethod
    def from_map(cls, m: CombinatorialMap) -> "MapBuilder":
        b = cls()
        b._next_dart = m.num_darts
        for d in range(m.num_darts):
            b.alpha[d] = m.alpha[d]
            b.curve[d] = m.curve_of_dart[d]
        for orb in vertices(m):
            vid = b._next_vertex
            b._next_vertex += 1
            b.rot[vid] = list(orb)
            for d in orb:
                b.vertex_of[d] = vid
        return b

    # ---- creation ----

    def new_dart(self, curve: int) -> int:
        d = self._next_dart
        self._next_dart += 1
        self.curve[d] = curve
        return d

    def new_vertex(self, darts_ccw: Sequence[int]) -> int:
        vid = self._next_vertex
        self._next_vertex += 1
        self.rot[vid] = list(darts_ccw)
        for d in darts_ccw:
            self.vertex_of[d] = vid
        return vid

    def link(self, d: int, e: int) -> None:
        self.alpha[d] = e
        self.alpha[e] = d

    # ---- deletion ----

    def delete_dart(self, d: int) -> None:
        self.curve.pop(d)
        self.alpha.pop(d, None)
        vid = self.vertex_of.pop(d, None)
        if vid is not None:
            self.rot[vid].remove(d)
            if not self.rot[vid]:
                del self.rot[vid]

    def delete_vertex_with_darts(self, vid: int) -> list[int]:
        ds = list(self.rot.get(vid, ()))
        for d in ds:
            self.delete_dart(d)
        return ds

    def smooth_valence_two(self, vid: int) -> None:
        """Remove a valence-2 vertex, merging its two edges into one."""
        p, q = self.rot[vid]
        a, b = self.alpha[p], self.alpha[q]
        self.delete_dart(p)
        self.delete_dart(q)
        self.link(a, b)

    # ---- output ----

    def finalize(self) -> tuple[CombinatorialMap, dict[int, int], dict[int, int]]:
        """Compact dart ids; returns (map, old_to_new, new_to_old)."""
        survivors = sorted(self.curve)
        old_to_new = {d: i for i, d in enumerate(survivors)}
        new_to_old = {i: d for d, i in old_to_new.items()}
        n = len(survivors)
        sigma = [0] * n
        alpha = [0] * n
        curve = [0] * n
        for vid, orb in self.rot.items():
            L = len(orb)
            for i, d in enumerate(orb):
                sigma[old_to_new[d]] = old_to_new[orb[(i + 1) % L]]
        for d in survivors:
            alpha[old_to_new[d]] = old_to_new[self.alpha[d]]
            curve[old_to_new[d]] = self.curve[d]
        return CombinatorialMap(sigma, alpha, curve), old_to_new, new_to_old


def _transfer_labels(
    old_map: CombinatorialMap,
    new_map: CombinatorialMap,
    old_to_new: Mapping[int, int],
) -> dict[int, int]:
    """Move face_genus labels to the new map via any surviving dart."""
    if not old_map.face_genus:
        return {}
    new_face_of = face_lookup(new_map)
    out: dict[int, int] = {}
    old_faces = {f.key: f for f in faces(old_map)}
    for fk, label in old_map.face_genus.items():
        if not label:
            continue
        for d in old_faces[fk].darts:
            nd = old_to_new.get(d)
            if nd is not None:
                out[new_face_of[nd]] = out.get(new_face_of[nd], 0) + label
                break
        else:
            raise ValueError(f"labeled face {fk} lost all darts in surgery")
    return out


# ============================================================
# Exact planar geometry (rational coordinates)
# ============================================================

Pt = tuple[Fraction, Fraction]


def _orient(a: Pt, b: Pt, c: Pt) -> int:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _cross(u: Pt, v: Pt) -> Fraction:
    return u[0] * v[1] - u[1] * v[0]


def _sub(a: Pt, b: Pt) -> Pt:
    return (a[0] - b[0], a[1] - b[1])


def _line_intersection(p: Pt, u: Pt, q: Pt, v: Pt) -> Pt | None:
    """Intersection of lines p + t*u and q + s*v, or None when parallel."""
    den = _cross(u, v)
    if den == 0:
        return None
    t = _cross(_sub(q, p), v) / den
    return (p[0] + t * u[0], p[1] + t * u[1])


def _param_along(p: Pt, u: Pt, x: Pt) -> Fraction:
    """Parameter t with x = p + t*u (u nonzero, x on the line)."""
    if u[0] != 0:
        return (x[0] - p[0]) / u[0]
    return (x[1] - p[1]) / u[1]


def _square_perimeter_point(s: Fraction, half: Fraction) -> Pt:
    """Point at perimeter fraction s (in [0,1), CCW from the bottom-right corner)
    of the axis-aligned square [-half, half]^2."""
    t = s * 8 * half  # total perimeter 8*half
    for (corner, step) in (
        ((half, -half), (Fraction(0), Fraction(1))),
        ((half, half), (Fraction(-1), Fraction(0))),
        ((-half, half), (Fraction(0), Fraction(-1))),
        ((-half, -half), (Fraction(1), Fraction(0))),
    ):
        if t <= 2 * half:
            return (corner[0] + step[0] * t, corner[1] + step[1] * t)
        t -= 2 * half
    raise AssertionError("perimeter fraction out of range")


def _perimeter_param(x: Pt, half: Fraction) -> Fraction:
    """Inverse of _square_perimeter_point for points on the square boundary."""
    if x[0] == half:
        return (x[1] + half) / (8 * half)
    if x[1] == half:
        return (2 * half + (half - x[0])) / (8 * half)
    if x[0] == -half:
        return (4 * half + (half - x[1])) / (8 * half)
    if x[1] == -half:
        return (6 * half + (x[0] + half)) / (8 * half)
    raise AssertionError("point is not on the square boundary")


# ============================================================
# Pencil perturbation and triangle collapse
# ============================================================


def _pencil_chords(k: int, delta: Fraction, salt: Fraction
                   ) -> tuple[list[Pt], list[tuple[Pt, Pt]]] | None:
    """Offset chord arrangement for a 2k-port pencil disk.

    Ports sit on a square at staggered perimeter fractions; chord i joins
    ports i and i+k, translated off center by i*delta along its left normal.
    Returns (boundary points in port order, chord (point, direction) pairs)
    or None if the configuration is degenerate and needs a smaller delta.
    """
    half = Fraction(1)
    ports = []
    for j in range(2 * k):
        s = Fraction(j, 2 * k) + Fraction(j * j, 1) * salt
        ports.append(_square_perimeter_point(s, half))
    chords: list[tuple[Pt, Pt]] = []
    for i in range(k):
        p, q = ports[i], ports[i + k]
        u = _sub(q, p)
        nrm = (-u[1], u[0])
        off = (nrm[0] * delta * i, nrm[1] * delta * i)
        chords.append(((p[0] + off[0], p[1] + off[1]), u))
    # each chord must cross the boundary square exactly twice, near its ports
    hits: list[tuple[Pt, Pt]] = []
    for (p, u) in chords:
        pts = []
        for (c0, c1) in (((half, -half), (half, half)),
                         ((half, half), (-half, half)),
                         ((-half, half), (-half, -half)),
                         ((-half, -half), (half, -half))):
            x = _line_intersection(p, u, c0, _sub(c1, c0))
            if x is None:
                continue
            lo0, hi0 = min(c0[0], c1[0]), max(c0[0], c1[0])
            lo1, hi1 = min(c0[1], c1[1]), max(c0[1], c1[1])
            if lo0 <= x[0] <= hi0 and lo1 <= x[1] <= hi1:
                if all(xx != x for xx in pts):
                    pts.append(x)
        if len(pts) != 2:
            return None
        t0, t1 = _param_along(p, u, pts[0]), _param_along(p, u, pts[1])
        if t0 > t1:
            pts = [pts[1], pts[0]]
        hits.append((pts[0], pts[1]))
    return ports, [(hits[i][0], _sub(hits[i][1], hits[i][0])) for i in range(k)]


def _resolve_pencil_geometry(curve_order: Sequence[int], signed_delta: Fraction
                             ) -> tuple[list[Fraction], list[list[tuple[Fraction, int]]],
                                        list[list[int]]]:
    """Exact arrangement data for resolving a pencil of k strands.

    Returns per-chord boundary-entry perimeter parameters, per-chord sorted
    crossing lists (parameter, other chord), and per-crossing-pair the CCW
    rotation pattern; raises if no generic offset is found.
    """
    k = len(curve_order)
    delta = abs(signed_delta)
    sign = 1 if signed_delta > 0 else -1
    salt = Fraction(1, 4 * k * k * k * 101)
    for _attempt in range(50):
        got = _pencil_chords(k, delta * sign, salt)
        if got is not None:
            ports, chords = got
            ok = _check_generic(ports, chords, k)
            if ok is not None:
                return ok
        delta /= 16
        salt /= 7
    raise AssertionError("no generic pencil resolution found")


def _check_generic(ports: list[Pt], chords: list[tuple[Pt, Pt]], k: int):
    half = Fraction(1)
    # boundary order must match the original ports
    entry_params: list[Fraction] = []
    exit_params: list[Fraction] = []
    for i, (p, u) in enumerate(chords):
        entry_params.append(_perimeter_param(p, half))
        q = (p[0] + u[0], p[1] + u[1])
        exit_params.append(_perimeter_param(q, half))
    order = sorted(range(2 * k), key=lambda j: entry_params[j] if j < k else exit_params[j - k])
    want_params = [entry_params[i] for i in range(k)] + [exit_params[i] for i in range(k)]
    if len(set(want_params)) != 2 * k:
        return None
    # positions must be in the same cyclic order as port indices 0..2k-1
    base = order.index(0)
    cyc = order[base:] + order[:base]
    if cyc != list(range(2 * k)):
        return None
    crossings: list[list[tuple[Fraction, int]]] = [[] for _ in range(k)]
    seen_points: list[Pt] = []
    for i in range(k):
        for j in range(i + 1, k):
            p, u = chords[i]
            q, v = chords[j]
            x = _line_intersection(p, u, q, v)
            if x is None:
                return None
            ti = _param_along(p, u, x)
            tj = _param_along(q, v, x)
            if not (0 < ti < 1 and 0 < tj < 1):
                return None
            if any(xx == x for xx in seen_points):
                return None
            seen_points.append(x)
            crossings[i].append((ti, j))
            crossings[j].append((tj, i))
    for i in range(k):
        crossings[i].sort()
    rotations: list[list[int]] = []
    for i in range(k):
        row = []
        for j in range(k):
            if i == j:
                row.append(0)
            else:
                s = _cross(chords[i][1], chords[j][1])
                row.append(1 if s > 0 else -1)
        rotations.append(row)
    return entry_params, crossings, rotations


def perturb_pencil(system: CurveSystem, vertex_key: int,
                   _signed_delta: Fraction | None = None) -> CurveSystem:
    """Resolve a pencil vertex into pairwise crossings of its strands.

    Replaces a valence-2k vertex (k >= 3) by the chord arrangement obtained
    by pushing strand i off the common point by i*delta, which is generic
    and bigon-free inside the disk, so every pair of strands gains exactly
    one crossing.  Records a PencilDisk with the counterclockwise boundary
    order of the strand ends.  Strands of one curve meeting at the same
    pencil are rejected.
    """
    out, _ = perturb_pencil_impl(system, vertex_key, _signed_delta)
    return out


def perturb_pencil_impl(
    system: CurveSystem, vertex_key: int,
    _signed_delta: Fraction | None = None,
) -> tuple[CurveSystem, dict[int, int]]:
    m = system.map
    verts = {orb[0]: orb for orb in vertices(m)}
    if vertex_key not in verts:
        raise ValueError(f"no vertex with key {vertex_key}")
    orb = verts[vertex_key]
    if len(orb) < 6 or len(orb) % 2 != 0:
        raise ValueError(f"vertex {vertex_key} has valence {len(orb)}, not a pencil")
    k = len(orb) // 2
    strand_curves = [m.curve_of_dart[orb[i]] for i in range(k)]
    if len(set(strand_curves)) != k:
        raise ValueError("pencil has two strands of the same curve")

    delta = _signed_delta if _signed_delta is not None else Fraction(1, 64 * k * k)
    _entry, crossings, rotations = _resolve_pencil_geometry(strand_curves, delta)

    b = MapBuilder.from_map(m)
    orbset = set(orb)
    ext = [b.alpha[d] for d in orb]  # continuations of the 2k ends (may be in orb)
    for d in orb:
        b.delete_dart(d)
    # chord i enters at port i and exits at port i+k; walk it through its
    # crossings, creating darts as needed
    dart_at: dict[tuple[int, int, int], int] = {}  # (i, crossing index along i, 0=back/1=fwd)
    for i in range(k):
        for ci in range(len(crossings[i])):
            dart_at[(i, ci, 0)] = b.new_dart(strand_curves[i])
            dart_at[(i, ci, 1)] = b.new_dart(strand_curves[i])
    # vertices: crossing of chords i<j
    pos_of: dict[tuple[int, int], int] = {}
    for i in range(k):
        for ci, (_t, j) in enumerate(crossings[i]):
            pos_of[(i, j)] = ci
    for i in range(k):
        for (_t, j) in crossings[i]:
            if i > j:
                continue
            ci = pos_of[(i, j)]
            cj = pos_of[(j, i)]
            ib, if_ = dart_at[(i, ci, 0)], dart_at[(i, ci, 1)]
            jb, jf = dart_at[(j, cj, 0)], dart_at[(j, cj, 1)]
            if rotations[i][j] > 0:
                b.new_vertex([if_, jf, ib, jb])
            else:
                b.new_vertex([if_, jb, ib, jf])
    # edges along chord i; a port whose old edge closed up onto the pencil
    # itself now closes onto the matching stub of its partner port
    stub = {}
    for i in range(k):
        cs = crossings[i]
        stub[i] = dart_at[(i, 0, 0)]
        stub[i + k] = dart_at[(i, len(cs) - 1, 1)]
        for ci in range(len(cs) - 1):
            b.link(dart_at[(i, ci, 1)], dart_at[(i, ci + 1, 0)])
    port_of = {d: j for j, d in enumerate(orb)}
    done = set()
    for j in range(2 * k):
        if j in done:
            continue
        partner = ext[j]
        if partner in orbset:
            jj = port_of[partner]
            b.link(stub[j], stub[jj])
            done.add(jj)
        else:
            b.link(stub[j], partner)
        done.add(j)

    new_map, old_to_new, _ = b.finalize()
    new_map.face_genus = _transfer_labels(m, new_map, old_to_new)

    boundary = []
    seen: dict[int, int] = {}
    for d in orb:
        c = m.curve_of_dart[d]
        seen[c] = seen.get(c, 0) + 1
        boundary.append((c, "s1" if seen[c] == 1 else "s2"))
    roles = {c.id: c.role for c in system.curves}
    member_roles = {roles.get(c, ROLE_PLAIN) for c in strand_curves}
    if member_roles == {ROLE_UP}:
        side = SIDE_UP
    elif member_roles == {ROLE_DOWN}:
        side = SIDE_DOWN
    else:
        side = SIDE_GENERIC
    disk = PencilDisk(tuple(strand_curves), tuple(boundary), side)

    out = CurveSystem(new_map, list(system.curves), list(system.pencils) + [disk],
                      system.genus_declared)
    return out, old_to_new


def collapse_triangle(system: CurveSystem, face_key: int) -> CurveSystem:
    """Shrink a triangular disk face to a pencil vertex of valence 6.

    The face must have three sides on three distinct curves with plain
    crossings at its corners.  The inverse of resolving the resulting
    pencil; all pairwise crossing counts are preserved.
    """
    out, _o2n, _vk = collapse_triangle_impl(system, face_key)
    return out


def collapse_triangle_impl(
    system: CurveSystem, face_key: int
) -> tuple[CurveSystem, dict[int, int], int]:
    m = system.map
    fc = {f.key: f for f in faces(m)}
    if face_key not in fc:
        raise ValueError(f"no face with key {face_key}")
    f = fc[face_key]
    if f.sides != 3 or len(f.darts) != 3:
        raise ValueError(f"face {face_key} is not a plain triangle")
    if len(set(f.side_curves)) != 3:
        raise ValueError(f"face {face_key} has repeated side curves")
    if m.face_genus.get(face_key, 0) != 0:
        raise ValueError(f"face {face_key} is not a disk")
    lk = vertex_lookup(m)
    val = valences(m)
    for d in f.darts:
        if val[lk[d]] != 4:
            raise ValueError(f"corner at dart {d} is not a plain crossing")

    t0, t1, t2 = f.darts
    lk2 = vertex_lookup(m)
    if len({lk2[t0], lk2[t1], lk2[t2]}) != 3:
        raise ValueError(f"face {face_key} revisits a corner vertex")
    b = MapBuilder.from_map(m)
    corners = []  # per corner: (X, Y) = outward darts of the in-strand and out-strand
    for t_in, t_out in ((t2, t0), (t0, t1), (t1, t2)):
        x = strand_opposite(m, m.alpha[t_in])
        y = strand_opposite(m, t_out)
        corners.append((x, y))
    doomed: set[int] = set()
    for d in (t0, t1, t2):
        doomed.update(b.rot[b.vertex_of[d]])
    # counterclockwise around the collapsed point the corner sectors appear
    # in reverse face order, each contributing (X, Y)
    ext_order = []
    for (x, y) in reversed(corners):
        ext_order.extend([x, y])
    continuation = {e: b.alpha[e] for e in ext_order}
    for d in (t0, t1, t2):
        b.delete_vertex_with_darts(b.vertex_of[d])
    new_of = {e: b.new_dart(m.curve_of_dart[e]) for e in ext_order}
    linked = set()
    for e in ext_order:
        if e in linked:
            continue
        c = continuation[e]
        if c in doomed:
            b.link(new_of[e], new_of[c])
            linked.add(c)
        else:
            b.link(new_of[e], c)
        linked.add(e)
    b.new_vertex([new_of[e] for e in ext_order])
    new_map, old_to_new, _ = b.finalize()
    new_map.face_genus = _transfer_labels(m, new_map, old_to_new)
    vkey = min(old_to_new[new_of[e]] for e in ext_order)
    out = CurveSystem(new_map, list(system.curves), list(system.pencils),
                      system.genus_declared)
    return out, old_to_new, vkey


# ============================================================
# Isomorphism
# ============================================================


def canonical_form(m: CombinatorialMap, respect_curves: bool = True) -> tuple:
    """Canonical certificate of the rotation system, minimized over root darts.

    With ``respect_curves`` the certificate distinguishes curve ids as
    given; otherwise curves are renamed by first appearance so the
    certificate is invariant under relabeling.
    """
    n = m.num_darts
    best: tuple | None = None
    for root in range(n):
        ids = {root: 0}
        order = [root]
        i = 0
        while i < len(order):
            d = order[i]
            i += 1
            for nxt in (m.sigma[d], m.alpha[d]):
                if nxt not in ids:
                    ids[nxt] = len(order)
                    order.append(nxt)
        rename: dict[int, int] = {}
        enc = []
        for d in order:
            c = m.curve_of_dart[d]
            if respect_curves:
                col = c
            else:
                col = rename.setdefault(c, len(rename))
            enc.append((ids[m.sigma[d]], ids[m.alpha[d]], col))
        labels = sorted(
            (m.face_genus.get(k, 0), min(ids[d] for d in f.darts))
            for k, f in ((ff.key, ff) for ff in faces(m))
            if m.face_genus.get(k, 0)
        )
        cert = (tuple(enc), tuple(labels))
        if best is None or cert < best:
            best = cert
    return best if best is not None else ((), ())


def maps_isomorphic(a: CombinatorialMap, b: CombinatorialMap,
                    respect_curves: bool = True) -> bool:
    """Orientation-preserving isomorphism test via canonical certificates."""
    if a.num_darts != b.num_darts:
        return False
    return canonical_form(a, respect_curves) == canonical_form(b, respect_curves)


# ============================================================
# Serialization
# ============================================================


def system_to_dict(system: CurveSystem) -> dict:
    m = system.map
    g = system.genus_declared if system.genus_declared is not None else genus(m)
    return {
        "genus_declared": g,
        "num_darts": m.num_darts,
        "sigma": list(m.sigma),
        "alpha": list(m.alpha),
        "curve_of_dart": list(m.curve_of_dart),
        "curves": [
            {"id": c.id, "name": c.name, "role": c.role, "partner": c.partner}
            for c in sorted(system.curves, key=lambda c: c.id)
        ],
        "face_genus": {str(k): v for k, v in sorted(m.face_genus.items()) if v},
        "pencils": [
            {
                "member_curves": list(p.member_curves),
                "boundary_order": [[c, s] for (c, s) in p.boundary_order],
                "side": p.side,
            }
            for p in system.pencils
        ],
    }


def save_system(system: CurveSystem, path: str | None = None) -> str:
    """Canonical JSON for a system; identical systems give identical bytes."""
    text = json.dumps(system_to_dict(system), sort_keys=True, separators=(",", ":")) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def system_from_dict(doc: dict) -> CurveSystem:
    required = ["genus_declared", "num_darts", "sigma", "alpha", "curve_of_dart",
                "curves", "face_genus", "pencils"]
    for key in required:
        if key not in doc:
            raise ValueError(f"missing field {key!r}")
    n = doc["num_darts"]
    for arr in ("sigma", "alpha", "curve_of_dart"):
        if len(doc[arr]) != n:
            raise ValueError(f"field {arr!r} has length {len(doc[arr])}, expected {n}")
    m = CombinatorialMap(
        [int(x) for x in doc["sigma"]],
        [int(x) for x in doc["alpha"]],
        [int(x) for x in doc["curve_of_dart"]],
        {int(k): int(v) for k, v in doc["face_genus"].items()},
    )
    curves = [
        Curve(int(c["id"]), str(c["name"]), str(c["role"]),
              None if c["partner"] is None else int(c["partner"]))
        for c in doc["curves"]
    ]
    pencils = [
        PencilDisk(
            tuple(int(x) for x in p["member_curves"]),
            tuple((int(c), str(s)) for (c, s) in p["boundary_order"]),
            str(p["side"]),
        )
        for p in doc["pencils"]
    ]
    return CurveSystem(m, curves, pencils, int(doc["genus_declared"]))


def load_system(text_or_path: str, *, is_path: bool = True) -> CurveSystem:
    """Parse a stored system, reporting malformed input with positions."""
    if is_path:
        with open(text_or_path) as fh:
            text = fh.read()
        origin = text_or_path
    else:
        text = text_or_path
        origin = "<string>"
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{origin}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        system = system_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{origin}: {exc}") from None
    diag = validate_map(system)
    if not diag.ok:
        raise ValueError(f"{origin}: invalid map: " + "; ".join(diag.violations))
    return system
