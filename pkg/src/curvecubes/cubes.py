"""Dual square complexes and cube dimension for curve systems.

The complex dual to a realization has one vertex per complement face, one
edge per realization edge, and one square per crossing; each curve becomes
a hyperplane crossing the squares it passes through.  For 1-systems the
dimension of the dual cube complex is governed by a triple criterion:
a set of curves spans a cube exactly when every pair crosses and every
triple bounds a triangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .position import forms_triangle, reduce
from .surface_map import (
    CurveSystem,
    face_lookup,
    genus,
    intersection_matrix,
    trace_curve,
    validate_map,
    vertices,
)

__all__ = [
    "CubeReport",
    "Square",
    "SquareComplex",
    "SquareEdge",
    "TripleCache",
    "cube_dimension",
    "dual_square_complex",
    "is_complete_one_system",
    "is_one_system",
    "maximal_cubes",
    "orbit_upper_bound",
    "square_complex_to_dot",
    "subset_cube_dimension",
]


# ============================================================
# One-system predicates
# ============================================================


def _reduced_matrix(system: CurveSystem):
    red = reduce(system)
    ids = red.curve_ids()
    return red, ids, intersection_matrix(red)


def _one_system_violation(ids: list[int], mat: list[list[int]]) -> str | None:
    for i in range(len(ids)):
        if mat[i][i]:
            return f"curve {ids[i]} has essential self-crossings"
        for j in range(i + 1, len(ids)):
            if mat[i][j] > 1:
                return f"curves {ids[i]} and {ids[j]} cross {mat[i][j]} times"
    return None


def is_one_system(system: CurveSystem) -> bool:
    """All curves simple and pairwise geometric intersection at most one."""
    _, ids, mat = _reduced_matrix(system)
    return _one_system_violation(ids, mat) is None


def is_complete_one_system(system: CurveSystem) -> bool:
    """Every pair of curves meets exactly once (and all curves are simple)."""
    _, ids, mat = _reduced_matrix(system)
    if _one_system_violation(ids, mat) is not None:
        return False
    n = len(ids)
    return all(mat[i][j] == 1 for i in range(n) for j in range(i + 1, n))


# ============================================================
# Triple cache
# ============================================================


class TripleCache:
    """Shared memo of pair-crossing and triple-triangle facts.

    Holds the reduced system so that sweeps over many subsets (cube
    enumeration, all-subset dimension checks) answer each triple once.
    """

    def __init__(self, reduced: CurveSystem, ids: list[int],
                 mat: list[list[int]]):
        self.reduced = reduced
        self.ids = list(ids)
        self._pos = {cid: i for i, cid in enumerate(self.ids)}
        self._mat = mat
        self._memo: dict[frozenset[int], bool] = {}

    @classmethod
    def for_system(cls, system: CurveSystem) -> "TripleCache":
        if not system.curves:
            return cls(system, [], [])
        red, ids, mat = _reduced_matrix(system)
        bad = _one_system_violation(ids, mat)
        if bad is not None:
            raise ValueError(f"not a 1-system: {bad}")
        return cls(red, ids, mat)

    def crosses(self, a: int, b: int) -> bool:
        return self._mat[self._pos[a]][self._pos[b]] >= 1

    def triangle(self, a: int, b: int, c: int) -> bool:
        key = frozenset((a, b, c))
        try:
            return self._memo[key]
        except KeyError:
            pass
        val = forms_triangle(self.reduced, key)
        self._memo[key] = val
        return val


# ============================================================
# Cube enumeration
# ============================================================


@dataclass
class CubeReport:
    """Maximal cubes of the dual complex, as sets of curve identifiers."""

    maximal_cubes: list[tuple[int, ...]]
    dimension: int


def _compatible(cache: TripleCache, u: int, v: int, members: set[int]) -> bool:
    if not cache.crosses(u, v):
        return False
    return all(cache.triangle(u, v, w) for w in members)


def _extend(cache: TripleCache, members: set[int], cand: set[int],
            done: set[int], out: list[tuple[int, ...]]) -> None:
    if not cand and not done:
        if len(members) >= 2:
            out.append(tuple(sorted(members)))
        return
    for v in sorted(cand):
        grown = members | {v}
        cand2 = {u for u in cand if u != v and _compatible(cache, u, v, members)}
        done2 = {u for u in done if _compatible(cache, u, v, members)}
        _extend(cache, grown, cand2, done2, out)
        cand.discard(v)
        done.add(v)


def maximal_cubes(system: CurveSystem,
                  cache: TripleCache | None = None) -> CubeReport:
    """Enumerate the maximal cubes: sets in which every pair crosses and
    every triple bounds a triangle.

    Sets of size one are never reported, so the union of the listed cubes
    covers exactly the curves crossing at least one other curve.
    """
    if cache is None:
        cache = TripleCache.for_system(system)
    out: list[tuple[int, ...]] = []
    _extend(cache, set(), set(cache.ids), set(), out)
    cubes = sorted(out, key=lambda t: (-len(t), t))
    for s in cubes:
        for t in cubes:
            if s is not t and set(s) <= set(t):
                raise AssertionError(f"cube {s} nested inside {t}")
    crossing = {a for a in cache.ids
                if any(b != a and cache.crosses(a, b) for b in cache.ids)}
    covered: set[int] = set()
    for s in cubes:
        covered.update(s)
    if not crossing <= covered:
        raise AssertionError(f"curves {sorted(crossing - covered)} in no cube")
    if cubes:
        dim = max(len(s) for s in cubes)
    elif cache.ids:
        dim = 1
    else:
        dim = 0
    return CubeReport(cubes, dim)


def cube_dimension(system: CurveSystem,
                   cache: TripleCache | None = None) -> int:
    return maximal_cubes(system, cache).dimension


def subset_cube_dimension(system: CurveSystem, subset,
                          cache: TripleCache | None = None) -> int:
    """Dimension of the dual cube complex of the subsystem.

    One when no pair of the subset crosses, two when pairs cross but no
    triple bounds a triangle, and otherwise the size of the largest
    sub-subset in which every triple bounds one.
    """
    chosen = set(subset)
    if not chosen:
        raise ValueError("subset must name at least one curve")
    if cache is None:
        cache = TripleCache.for_system(system)
    unknown = chosen - set(cache.ids)
    if unknown:
        raise ValueError(f"curves {sorted(unknown)} not in the system")
    out: list[tuple[int, ...]] = []
    _extend(cache, set(), chosen, set(), out)
    if not out:
        return 1
    return max(len(s) for s in out)


# ============================================================
# Dual square complex
# ============================================================


@dataclass(frozen=True)
class SquareEdge:
    """A realization edge, dual to a complex edge between two regions."""

    key: int
    curve: int
    ends: tuple[int, int]


@dataclass(frozen=True)
class Square:
    """A crossing with its four incident edges and surrounding regions.

    ``corners`` lists the sector faces in rotation order; entries repeat
    when one face wraps several sectors of the crossing.
    """

    key: int
    edges: tuple[int, int, int, int]
    corners: tuple[int, ...]


@dataclass
class SquareComplex:
    vertices: list[int]
    edges: list[SquareEdge]
    squares: list[Square]
    hyperplanes: dict[int, list[int]]

    def square_counts(self) -> dict[int, int]:
        return {c: len(seq) for c, seq in self.hyperplanes.items()}


def dual_square_complex(system: CurveSystem) -> SquareComplex:
    """Build the square complex dual to a minimal-position realization.

    Vertices are complement faces, edges are the realization edges, and
    squares are the crossings; each hyperplane records its curve's squares
    in traversal order.  When the system fills the surface (every face a
    disk, every vertex a crossing) the complex carries the same Euler
    characteristic as the surface, and this is asserted.
    """
    diag = validate_map(system)
    if not diag.ok:
        raise ValueError(f"invalid system: {diag.violations}")
    m = system.map
    orbs = vertices(m)
    if any(len(orb) >= 6 for orb in orbs):
        raise ValueError("resolve pencil vertices before building the complex")
    fl = face_lookup(m)
    verts = sorted({fl[d] for d in range(m.num_darts)})

    edges = []
    for d in range(m.num_darts):
        a = m.alpha[d]
        if d < a:
            edges.append(SquareEdge(d, m.curve_of_dart[d], (fl[d], fl[a])))

    crossing_key: dict[int, int] = {}
    squares = []
    for orb in orbs:
        if len(orb) != 4:
            continue
        for d in orb:
            crossing_key[d] = orb[0]
        ekeys = tuple(min(d, m.alpha[d]) for d in orb)
        corners = tuple(fl[m.sigma[d]] for d in orb)
        squares.append(Square(orb[0], ekeys, corners))

    hyper: dict[int, list[int]] = {}
    for c in system.curve_ids():
        seq = []
        tr = trace_curve(m, c)
        for i in range(1, len(tr), 2):
            d = tr[i]
            if d in crossing_key:
                seq.append(crossing_key[d])
        hyper[c] = seq

    ids = system.curve_ids()
    mat = intersection_matrix(system)
    n = len(ids)
    pair_total = sum(mat[i][j] for i in range(n) for j in range(i, n))
    if len(squares) != pair_total:
        raise AssertionError(
            f"{len(squares)} squares against {pair_total} crossing pairs")
    for i, c in enumerate(ids):
        want = sum(mat[i]) + mat[i][i]
        if len(hyper[c]) != want:
            raise AssertionError(
                f"hyperplane {c} passes {len(hyper[c])} squares, wants {want}")

    filling = (m.num_darts > 0
               and not any(m.face_genus.values())
               and all(len(orb) == 4 for orb in orbs))
    if filling:
        chi = len(verts) - len(edges) + len(squares)
        if chi != 2 - 2 * genus(m):
            raise AssertionError(
                f"complex Euler characteristic {chi} off the filling surface")
    return SquareComplex(verts, edges, squares, hyper)


def square_complex_to_dot(sc: SquareComplex) -> str:
    """DOT rendering of the complex's vertices and curve-tagged edges."""
    lines = ["graph squares {"]
    for v in sc.vertices:
        lines.append(f'  r{v} [label="region {v}"];')
    for e in sc.edges:
        a, b = e.ends
        lines.append(f'  r{a} -- r{b} [label="{e.curve}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ============================================================
# Counting bound
# ============================================================


def orbit_upper_bound(g: int) -> int:
    """Exact value of (2g(2g+1))!, the labeled-data bound on orbit counts."""
    if g < 2:
        raise ValueError("the bound is stated for genus at least 2")
    return math.factorial(2 * g * (2 * g + 1))
