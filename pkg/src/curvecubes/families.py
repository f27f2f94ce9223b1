"""Generators for the standard curve systems.

Three constructions live here, all producing :class:`CurveSystem` values in
tested minimal position on a closed oriented surface:

* ``gamma(epsilon)`` -- for a sign vector of odd length ``g``, the system of
  ``2g + 1`` curves consisting of one equatorial curve and ``g`` partner
  pairs, each pair hung on its own handle and routed through one of two
  polar fans according to its sign.  Every pair of curves crosses exactly
  once and the system fills the genus-``g`` surface.
* ``canonical(genus)`` -- the maximally symmetric system of ``2 * genus + 1``
  curves through a single resolved fan, filling the surface of the given
  genus.
* ``stabilize(system, curve, point)`` -- genus-raising surgery: two new
  curves shadowing a chosen curve are threaded through a fresh handle
  attached beside a chosen arc, growing a maximum complete 1-system on
  genus ``g`` into one on genus ``g + 1``.

The layout used by ``gamma`` keeps every stated crossing visible and admits
no others.  Think of a sphere with ``g`` handles spread along an equator:

* The equatorial curve runs eastward through two crossings per station.
* A station with sign ``+1`` hangs its pair from the north fan: each curve
  drops from the fan to the equator, crosses it southbound, sweeps eastward
  through the southern belt, and dives through its station's tunnel back to
  the fan.  Signs ``-1`` mirror this through the south fan, sweeping
  westward through the northern belt.
* An up curve and a down curve meet exactly once, in the northern belt when
  the up station trails the down station by at most ``(g - 1) / 2``
  stations, and in the southern belt otherwise.

All curves of equal sign meet only at their fan, which is resolved into
pairwise crossings on a small disk; the disk record keeps the fan's
boundary order for downstream use.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .cubes import is_complete_one_system
from .surface_map import (
    CombinatorialMap,
    Curve,
    CurveSystem,
    PencilDisk,
    ROLE_DELTA,
    ROLE_DELTA_DOUBLE_PRIME,
    ROLE_DELTA_PRIME,
    ROLE_DOWN,
    ROLE_PLAIN,
    ROLE_UP,
    SIDE_DOWN,
    SIDE_UP,
    faces,
    genus,
    intersection_matrix,
    perturb_pencil_impl,
    trace_curve,
    validate_map,
    vertices,
)

__all__ = [
    "GammaMetadata",
    "gamma",
    "canonical",
    "is_filling",
    "stabilize",
]


# ============================================================
# Metadata
# ============================================================


@dataclass(frozen=True)
class GammaMetadata:
    """Construction record accompanying a ``gamma`` system.

    ``stations[s]`` holds the ids of station ``s``'s partner pair, west
    member first.  ``up_pencil``/``down_pencil`` keep the fan disks with
    their boundary order as read before the fan was resolved; a fan
    with a single pair is already a plain crossing and its record is
    read the same way, while an absent fan is ``None``.  In these
    records ``s1`` names the end of a strand whose outward continuation
    runs through its station's tunnel, meeting nothing before the
    handle's midpoint, and ``s2`` the end dropping straight to the
    equator.  ``exit_tags[c]`` says through which of its two ends curve
    ``c``'s stored trace leaves the fan when walked forward; resolving
    a fan renumbers every dart, so this is pinned down here rather than
    left to downstream recomputation.
    """

    epsilon: tuple[int, ...]
    delta: int
    partners: dict[int, int]
    stations: tuple[tuple[int, int], ...]
    ups: tuple[int, ...]
    downs: tuple[int, ...]
    up_pencil: PencilDisk | None
    down_pencil: PencilDisk | None
    exit_tags: dict[int, str]


# ============================================================
# The sign-vector systems gamma(epsilon)
# ============================================================


def _station_curves(s: int) -> tuple[int, int]:
    return 1 + 2 * s, 2 + 2 * s


def _rooted_fan_slots(blocks: list, azim: int, forward: bool) -> list:
    """Concatenate fan blocks, starting from a canonically chosen block.

    The choice reads only the cyclic pattern of block kinds and azimuth
    gaps, never curve ids, so rotating the sign vector moves the root to
    the corresponding block.  The fan vertex then resolves identically in
    every rotation, which is what makes the whole generator equivariant.
    A perfectly symmetric pattern (a constant sign vector) has no
    distinguished block; the first one serves, and equivariance for those
    vectors holds at the unresolved-pencil level.
    """
    nb = len(blocks)
    step = 1 if forward else -1
    seq = []
    for t in range(nb):
        az, kind, _ = blocks[t]
        az_next = blocks[(t + 1) % nb][0]
        gap = (step * (az_next - az)) % azim
        seq.append((kind, gap))
    best = min(range(nb), key=lambda r: [seq[(r + t) % nb] for t in range(nb)])
    return [slot for t in range(nb) for slot in blocks[(best + t) % nb][2]]


def _gamma_cycles_and_routes(eps: tuple[int, ...]):
    """Vertex rotations and curve itineraries for the layout.

    Every vertex is listed as its counterclockwise cycle of slots
    ``(curve, tag)``; every curve as its cyclic visit list
    ``(vertex, arrival tag, departure tag)``.  Tags are ``arr``/``dep``
    at plain crossings and ``Adep``/``Barr`` (north fan) or
    ``Aarr``/``Bdep`` (south fan) at the fans, where ``A`` marks the
    strand dropping straight to the equator and ``B`` the strand
    returning through the station's tunnel.
    """
    g = len(eps)
    n = (g - 1) // 2
    azim = 2 * g  # azimuth unit: half a station, so tunnels sit at odd values

    cycles: dict[tuple, list[tuple[int, str]]] = {}
    # Equator crossings: the equatorial curve runs east, pair curves cross
    # it southbound; counterclockwise from the eastern port.
    for s in range(g):
        for w in (0, 1):
            c = _station_curves(s)[w]
            cycles[("Z", s, w)] = [(0, "dep"), (c, "arr"), (0, "arr"), (c, "dep")]

    ups = [s for s in range(g) if eps[s] > 0]
    downs = [s for s in range(g) if eps[s] < 0]

    # Belt crossings.  North: an up curve's drop (southbound) meets a down
    # curve's westward sweep.  South: an up curve's eastward sweep meets a
    # down curve's drop.
    for i in ups:
        for t in range(1, n + 1):
            j = (i - t) % g
            if eps[j] < 0:
                for ru in (0, 1):
                    u = _station_curves(i)[ru]
                    for rd in (0, 1):
                        d = _station_curves(j)[rd]
                        cycles[("XN", i, j, ru, rd)] = [
                            (d, "arr"), (u, "arr"), (d, "dep"), (u, "dep")]
            j = (i + t) % g
            if eps[j] < 0:
                for ru in (0, 1):
                    u = _station_curves(i)[ru]
                    for rd in (0, 1):
                        d = _station_curves(j)[rd]
                        cycles[("XS", i, j, ru, rd)] = [
                            (u, "dep"), (d, "arr"), (u, "arr"), (d, "dep")]

    # Fans.  Viewed from outside the surface the north fan reads eastward,
    # the south fan westward.  Strand ends sit at their azimuth: drops at
    # the station, tunnel returns half a turn later.  Each fan cycle is
    # listed from a canonical block so that the fan's eventual resolution
    # is rooted the same way in every rotation of the sign vector.
    if ups:
        blocks = []
        for s in ups:
            f, c2 = _station_curves(s)
            blocks.append((2 * s, "A", [(f, "Adep"), (c2, "Adep")]))
            blocks.append(((2 * s + 2 * n + 1) % azim, "B",
                           [(f, "Barr"), (c2, "Barr")]))
        blocks.sort(key=lambda b: b[0])
        cycles[("P",)] = _rooted_fan_slots(blocks, azim, forward=True)
    if downs:
        blocks = []
        for s in downs:
            f, c2 = _station_curves(s)
            blocks.append((2 * s, "A", [(c2, "Aarr"), (f, "Aarr")]))
            blocks.append(((2 * s + 2 * n + 1) % azim, "B",
                           [(c2, "Bdep"), (f, "Bdep")]))
        blocks.sort(key=lambda b: -b[0])
        cycles[("Q",)] = _rooted_fan_slots(blocks, azim, forward=False)

    routes: dict[int, list[tuple[tuple, str, str]]] = {}
    routes[0] = [(("Z", s, w), "arr", "dep") for s in range(g) for w in (0, 1)]
    for i in ups:
        for r in (0, 1):
            c = _station_curves(i)[r]
            vis: list[tuple[tuple, str, str]] = [(("P",), "Barr", "Adep")]
            # Drop through the northern belt: the sweeps overhead belong to
            # trailing down stations, outermost (freshest sweep) first.
            for t in range(n, 0, -1):
                j = (i - t) % g
                if eps[j] < 0:
                    vis.append((("XN", i, j, r, 0), "arr", "dep"))
                    vis.append((("XN", i, j, r, 1), "arr", "dep"))
            vis.append((("Z", i, r), "arr", "dep"))
            # Sweep east through the southern belt across the drops of the
            # leading down stations, nearest first.
            for t in range(1, n + 1):
                j = (i + t) % g
                if eps[j] < 0:
                    vis.append((("XS", i, j, r, 0), "arr", "dep"))
                    vis.append((("XS", i, j, r, 1), "arr", "dep"))
            routes[c] = vis
    for j in downs:
        for r in (0, 1):
            c = _station_curves(j)[r]
            vis = [(("Q",), "Aarr", "Bdep")]
            # After the tunnel, sweep west through the northern belt across
            # the drops of the leading up stations, farthest azimuth first;
            # walking west meets each pair's east member before its west.
            for t in range(n, 0, -1):
                i = (j + t) % g
                if eps[i] > 0:
                    vis.append((("XN", i, j, 1, r), "arr", "dep"))
                    vis.append((("XN", i, j, 0, r), "arr", "dep"))
            vis.append((("Z", j, r), "arr", "dep"))
            # Drop through the southern belt under the sweeps of trailing
            # up stations, shallowest sweep first.
            for t in range(1, n + 1):
                i = (j - t) % g
                if eps[i] > 0:
                    vis.append((("XS", i, j, 1, r), "arr", "dep"))
                    vis.append((("XS", i, j, 0, r), "arr", "dep"))
            routes[c] = vis
    return cycles, routes


_KIND_RANK = {"Z": 0, "XN": 1, "XS": 2, "P": 3, "Q": 4}


def _assemble(cycles: dict, routes: dict) -> tuple[CombinatorialMap, dict]:
    """Lay out darts vertex by vertex and wire edges along each route.

    Returns the map together with the slot table mapping
    ``(vertex key, curve, tag)`` to the dart laid down for that slot.
    """
    order = sorted(cycles, key=lambda k: (_KIND_RANK[k[0]], k[1:]))
    sigma: list[int] = []
    curve_of: list[int] = []
    port: dict[tuple, int] = {}
    for key in order:
        cyc = cycles[key]
        base = len(sigma)
        size = len(cyc)
        for t, (c, tag) in enumerate(cyc):
            sigma.append(base + (t + 1) % size)
            curve_of.append(c)
            port[(key, c, tag)] = base + t
    alpha = [-1] * len(sigma)
    for c, visits in routes.items():
        for t, (vkey, _, dep_tag) in enumerate(visits):
            wkey, arr_tag, _ = visits[(t + 1) % len(visits)]
            d1 = port[(vkey, c, dep_tag)]
            d2 = port[(wkey, c, arr_tag)]
            alpha[d1] = d2
            alpha[d2] = d1
    if any(a < 0 for a in alpha):
        raise AssertionError("layout left unpaired darts")
    m = CombinatorialMap(sigma=sigma, alpha=alpha,
                         curve_of_dart=curve_of, face_genus={})
    return m, port


def _directed_fan_record(m: CombinatorialMap, port: dict, fan_key: tuple,
                         tag_map: dict[str, str],
                         side: str) -> tuple[PencilDisk, list[int]]:
    """Boundary record of one polar fan, read before any resolution.

    Walks the fan's rotation from its least dart.  ``tag_map`` translates
    the layout's slot tags into the strand-end names: the tunnel return
    becomes ``s1``, the equator drop ``s2``.  Also returns the fan's dart
    orbit so the caller can resolve it afterwards.
    """
    tag_of = {dart: tag_map[tag] for (key, _c, tag), dart in port.items()
              if key == fan_key}
    start = min(tag_of)
    orb = [start]
    d = m.sigma[start]
    while d != start:
        orb.append(d)
        d = m.sigma[d]
    if len(orb) != len(tag_of):
        raise AssertionError("fan rotation does not close over its slots")
    boundary = tuple((m.curve_of_dart[d], tag_of[d]) for d in orb)
    members = tuple(dict.fromkeys(m.curve_of_dart[d] for d in orb))
    return PencilDisk(member_curves=members,
                      boundary_order=boundary, side=side), orb


def gamma(epsilon: Sequence[int],
          resolve_fans: bool = True) -> tuple[CurveSystem, GammaMetadata]:
    """Build the sign-vector system for ``epsilon`` in {-1, +1}^g, g odd >= 3.

    Returns the realized system together with its construction record.
    The result has ``2g + 1`` curves meeting pairwise exactly once in
    ``g * (2g + 1)`` crossings and filling the genus-``g`` surface.
    Curve 0 is the equatorial curve; station ``s`` owns curves
    ``2s + 1`` and ``2s + 2``, named ``a...`` for sign ``+1`` and
    ``b...`` for sign ``-1``.

    With ``resolve_fans=False`` the polar fans are left as concurrent
    pencil vertices instead of being resolved into pairwise crossings;
    pairwise intersection numbers are unchanged and this form is
    equivariant under rotating ``epsilon`` for every vector, the
    constant ones included.
    """
    eps = tuple(int(e) for e in epsilon)
    g = len(eps)
    if g < 3 or g % 2 == 0:
        raise ValueError(f"sign vector length must be odd and >= 3, got {g}")
    if any(e not in (-1, 1) for e in eps):
        raise ValueError("sign vector entries must be +1 or -1")

    cycles, routes = _gamma_cycles_and_routes(eps)
    m, port = _assemble(cycles, routes)

    roster = [Curve(0, "d", ROLE_DELTA, None)]
    for s in range(g):
        f, c2 = _station_curves(s)
        role = ROLE_UP if eps[s] > 0 else ROLE_DOWN
        prefix = "a" if eps[s] > 0 else "b"
        roster.append(Curve(f, f"{prefix}{f}", role, c2))
        roster.append(Curve(c2, f"{prefix}{c2}", role, f))
    system = CurveSystem(m, roster, genus_declared=g)

    got = genus(m)
    if got != g:
        raise AssertionError(
            f"layout for {eps} produced genus {got}, expected {g}")

    up_ids = {c for s in range(g) if eps[s] > 0 for c in _station_curves(s)}
    down_ids = {c for s in range(g) if eps[s] < 0 for c in _station_curves(s)}

    up_disk = down_disk = None
    up_orb: list[int] | None = None
    down_orb: list[int] | None = None
    if up_ids:
        up_disk, up_orb = _directed_fan_record(
            m, port, ("P",), {"Barr": "s1", "Adep": "s2"}, SIDE_UP)
    if down_ids:
        down_disk, down_orb = _directed_fan_record(
            m, port, ("Q",), {"Bdep": "s1", "Aarr": "s2"}, SIDE_DOWN)

    # One reference dart per curve, kept current through renumberings so the
    # stored trace's running direction can be compared with the route's.
    anchor = {c: port[(("Z", s, w), c, "dep")]
              for s in range(g) for w, c in enumerate(_station_curves(s))}
    if up_orb is not None and resolve_fans and len(up_ids) > 2:
        system, o2n = perturb_pencil_impl(system, min(up_orb))
        anchor = {c: o2n[d] for c, d in anchor.items()}
        if down_orb is not None:
            down_orb = [o2n[d] for d in down_orb]
    if down_orb is not None and resolve_fans and len(down_ids) > 2:
        system, o2n = perturb_pencil_impl(system, min(down_orb))
        anchor = {c: o2n[d] for c, d in anchor.items()}

    exit_tags: dict[int, str] = {}
    flip = {"s1": "s2", "s2": "s1"}
    for c in sorted(up_ids | down_ids):
        tr = trace_curve(system.map, c)
        pos = tr.index(anchor[c])
        route_exit = "s2" if c in up_ids else "s1"
        exit_tags[c] = route_exit if pos % 2 == 0 else flip[route_exit]

    diag = validate_map(system, g)
    if not diag.ok:
        raise AssertionError("resolved layout is invalid: "
                             + "; ".join(diag.violations))
    m_a, m_b = len(up_ids) // 2, len(down_ids) // 2
    if resolve_fans:
        want = g * (2 * g + 1)
    else:
        want = 2 * g + 4 * m_a * m_b + (1 if m_a else 0) + (1 if m_b else 0)
    crossings = sum(1 for _ in vertices(system.map))
    if crossings != want:
        raise AssertionError(
            f"expected {want} vertices, found {crossings}")
    mat = intersection_matrix(system)
    span = len(mat)
    if any(mat[i][j] != (0 if i == j else 1)
           for i in range(span) for j in range(span)):
        raise AssertionError("curves do not meet pairwise exactly once")

    meta = GammaMetadata(
        epsilon=eps,
        delta=0,
        partners={c: _station_curves(s)[1 - w]
                  for s in range(g) for w, c in enumerate(_station_curves(s))},
        stations=tuple(_station_curves(s) for s in range(g)),
        ups=tuple(sorted(up_ids)),
        downs=tuple(sorted(down_ids)),
        up_pencil=up_disk,
        down_pencil=down_disk,
        exit_tags=exit_tags,
    )
    return system, meta


# ============================================================
# The canonical systems
# ============================================================


def canonical(genus_: int) -> CurveSystem:
    """The one-vertex system of ``2 * genus_ + 1`` curves, resolved.

    All curves pass through a single fan in repeating order, which closes
    each of them into a loop; resolving the fan leaves ``C(2g+1, 2)``
    crossings, pairwise one per pair, filling the surface.
    """
    if genus_ < 1:
        raise ValueError(f"genus must be >= 1, got {genus_}")
    count = 2 * genus_ + 1
    nd = 2 * count
    sigma = [(i + 1) % nd for i in range(nd)]
    alpha = [(i + count) % nd for i in range(nd)]
    curve_of = [i % count for i in range(nd)]
    m = CombinatorialMap(sigma=sigma, alpha=alpha,
                         curve_of_dart=curve_of, face_genus={})
    roster = [Curve(i, f"c{i}") for i in range(count)]
    system = CurveSystem(m, roster, genus_declared=genus_)
    if genus(m) != genus_:
        raise AssertionError("one-vertex layout has the wrong genus")
    system, _ = perturb_pencil_impl(system, 0)
    diag = validate_map(system, genus_)
    if not diag.ok:
        raise AssertionError("resolved one-vertex system is invalid: "
                             + "; ".join(diag.violations))
    return system


# ============================================================
# Filling check
# ============================================================


def is_filling(system: CurveSystem, declared_genus: int | None = None) -> bool:
    """Whether the complement is all disks on the declared surface.

    True when every face label is zero and the rotation system's Euler
    count lands on the declared genus.
    """
    if declared_genus is None:
        declared_genus = system.genus_declared
    if declared_genus is None:
        raise ValueError("no declared genus to check against")
    m = system.map
    if any(v > 0 for v in m.face_genus.values()):
        return False
    try:
        return genus(m) == declared_genus
    except ValueError:
        return False


# ============================================================
# Stabilization
# ============================================================


def _set_cycle(sigma: list[int], cyc: list[int]) -> None:
    for t, d in enumerate(cyc):
        sigma[d] = cyc[(t + 1) % len(cyc)]


def _orbit_key(m: CombinatorialMap, dart: int) -> int:
    best = dart
    d = m.sigma[dart]
    while d != dart:
        best = min(best, d)
        d = m.sigma[d]
    return best


def stabilize(system: CurveSystem, curve: int | Curve,
              point: int | None = None) -> CurveSystem:
    """Grow a maximum complete 1-system by one genus along ``curve``.

    Two new curves are threaded beside the chosen one.  Both shadow it
    all the way around: they run along its left side for the first half
    of the trip, cross over it on the arc halfway around, and come back
    along its right side, meeting each other curve once right beside its
    old crossing.  Near the chosen arc the two shadows dive through a
    freshly attached handle, crossing each other exactly once inside it.
    The result is a maximum complete 1-system on genus ``g + 1``: the
    two shadows form a triangle with every old curve, and each shadow
    forms one with the chosen curve and any third.

    ``point`` selects the arc: any dart of ``curve``, meaning the arc
    carried by that dart's edge.  By default the arc following the
    curve's lowest-keyed crossing is used.  The two new curves take the
    base curve's name with one and two primes; when the base curve is an
    equatorial (Delta) curve they receive the matching primed roles.
    """
    gid = curve.id if isinstance(curve, Curve) else int(curve)
    by_id = {c.id: c for c in system.curves}
    if gid not in by_id:
        raise ValueError(f"no curve with id {gid}")
    base = by_id[gid]
    m = system.map
    g = system.genus_declared if system.genus_declared is not None else genus(m)
    if len(system.curves) != 2 * g + 1:
        raise ValueError(
            f"system has {len(system.curves)} curves; a maximum complete "
            f"1-system on genus {g} has {2 * g + 1}")
    if not is_complete_one_system(system):
        raise ValueError("stabilization needs a complete 1-system")
    for orb in vertices(m):
        if len(orb) != 4 and any(m.curve_of_dart[d] == gid for d in orb):
            raise ValueError(
                "stabilization needs plain crossings along the chosen curve")

    trace = trace_curve(m, gid)
    total = len(trace)
    k = total // 2

    if point is None:
        best_t = 0
        best_key = None
        for t in range(k):
            key = _orbit_key(m, trace[2 * t + 1])
            if best_key is None or key < best_key:
                best_key, best_t = key, t
        h = trace[(2 * best_t + 2) % total]
    else:
        if not (0 <= point < m.num_darts) or m.curve_of_dart[point] != gid:
            raise ValueError("point must be a dart of the chosen curve")
        idx = trace.index(point)
        h = point if idx % 2 == 0 else trace[idx - 1]
    hbar = m.alpha[h]

    # Walk forward from the chosen arc.  The first-half crossings get
    # their shadow visits on the curve's left side, the second-half ones
    # on its right; the shadows change sides on the arc in between.
    rot = trace.index(h)
    seq = trace[rot:] + trace[:rot]
    arrs = [seq[2 * t + 1] for t in range(k)]
    split = k // 2

    sigma = list(m.sigma)
    alpha = list(m.alpha)
    curve_of = list(m.curve_of_dart)

    def new_dart(c: int) -> int:
        d = len(sigma)
        sigma.append(-1)
        alpha.append(-1)
        curve_of.append(c)
        return d

    id1 = max(by_id) + 1  # single prime: inner lane before the crossover
    id2 = id1 + 1         # double prime: outer lane before the crossover

    touched: set[int] = set()
    pW: list[int] = []; pE: list[int] = []   # single-prime lane, by visit
    qW: list[int] = []; qE: list[int] = []   # double-prime lane, by visit

    # Left-side visits: walking out of the old vertex, first the inner
    # single-prime crossing, then the outer double-prime one.
    for i in range(split):
        a = arrs[i]
        s = sigma[sigma[sigma[a]]]
        sbar = alpha[s]
        c = curve_of[s]
        touched.add(s); touched.add(sbar)
        n1S, n1N = new_dart(c), new_dart(c)
        n2S, n2N = new_dart(c), new_dart(c)
        e1W, e1E = new_dart(id1), new_dart(id1)
        e2W, e2E = new_dart(id2), new_dart(id2)
        alpha[s] = n1S; alpha[n1S] = s
        alpha[n1N] = n2S; alpha[n2S] = n1N
        alpha[n2N] = sbar; alpha[sbar] = n2N
        _set_cycle(sigma, [e1E, n1N, e1W, n1S])
        _set_cycle(sigma, [e2E, n2N, e2W, n2S])
        pW.append(e1W); pE.append(e1E)
        qW.append(e2W); qE.append(e2E)

    # Right-side visits: the double-prime lane is now the inner one.
    for i in range(split, k):
        a = arrs[i]
        r = sigma[a]
        rbar = alpha[r]
        c = curve_of[r]
        touched.add(r); touched.add(rbar)
        n2N, n2S = new_dart(c), new_dart(c)
        n1N, n1S = new_dart(c), new_dart(c)
        e2W, e2E = new_dart(id2), new_dart(id2)
        e1W, e1E = new_dart(id1), new_dart(id1)
        alpha[r] = n2N; alpha[n2N] = r
        alpha[n2S] = n1N; alpha[n1N] = n2S
        alpha[n1S] = rbar; alpha[rbar] = n1S
        _set_cycle(sigma, [e2E, n2N, e2W, n2S])
        _set_cycle(sigma, [e1E, n1N, e1W, n1S])
        pW.append(e1W); pE.append(e1E)
        qW.append(e2W); qE.append(e2E)

    # The crossover: walked forward, the halfway arc meets the inner
    # lane's crossing first, then the outer lane's.
    f = seq[2 * split]
    fbar = seq[2 * split + 1]
    touched.add(f); touched.add(fbar)
    x1W, x1E = new_dart(gid), new_dart(gid)
    x1N, x1S = new_dart(id1), new_dart(id1)
    x2W, x2E = new_dart(gid), new_dart(gid)
    x2N, x2S = new_dart(id2), new_dart(id2)
    alpha[f] = x1W; alpha[x1W] = f
    alpha[x1E] = x2W; alpha[x2W] = x1E
    alpha[x2E] = fbar; alpha[fbar] = x2E
    _set_cycle(sigma, [x1E, x1N, x1W, x1S])
    _set_cycle(sigma, [x2E, x2N, x2W, x2S])

    # The handle dive beside the chosen arc, where the shadows cross
    # each other exactly once.
    wpIn, wpOut = new_dart(id1), new_dart(id1)
    wppIn, wppOut = new_dart(id2), new_dart(id2)
    _set_cycle(sigma, [wpIn, wppIn, wpOut, wppOut])

    def chain(ws: list[int], es: list[int], xN: int, xS: int,
              wIn: int, wOut: int) -> None:
        alpha[wOut] = ws[0]; alpha[ws[0]] = wOut
        for i in range(split - 1):
            alpha[es[i]] = ws[i + 1]; alpha[ws[i + 1]] = es[i]
        alpha[es[split - 1]] = xN; alpha[xN] = es[split - 1]
        alpha[xS] = ws[split]; alpha[ws[split]] = xS
        for i in range(split, k - 1):
            alpha[es[i]] = ws[i + 1]; alpha[ws[i + 1]] = es[i]
        alpha[es[k - 1]] = wIn; alpha[wIn] = es[k - 1]

    chain(pW, pE, x1N, x1S, wpIn, wpOut)
    chain(qW, qE, x2N, x2S, wppIn, wppOut)

    # Carry positive face labels to the surviving side of each face: any
    # dart off the stabilized curve and off the subdivided strands still
    # borders the deep remainder, never a new shadow corridor.
    fg: dict[int, int] = {}
    labeled = {key: lab for key, lab in m.face_genus.items() if lab > 0}
    newm = CombinatorialMap(sigma=sigma, alpha=alpha,
                            curve_of_dart=curve_of, face_genus={})
    if labeled:
        old_faces = {f.key: f for f in faces(m)}
        dart_face: dict[int, int] = {}
        for f in faces(newm):
            for d in f.darts:
                dart_face[d] = f.key
        for key, lab in labeled.items():
            anchor = next(
                (d for d in old_faces[key].darts
                 if d not in touched and m.curve_of_dart[d] != gid), None)
            if anchor is None:
                raise ValueError(
                    f"cannot carry the label of face {key} across stabilization")
            fg[dart_face[anchor]] = fg.get(dart_face[anchor], 0) + lab
        newm = CombinatorialMap(sigma=sigma, alpha=alpha,
                                curve_of_dart=curve_of, face_genus=fg)

    role1, role2 = (ROLE_DELTA_PRIME, ROLE_DELTA_DOUBLE_PRIME) \
        if base.role == ROLE_DELTA else (ROLE_PLAIN, ROLE_PLAIN)
    roster = list(system.curves) + [
        Curve(id1, base.name + "'", role1, None),
        Curve(id2, base.name + "''", role2, None),
    ]
    out = CurveSystem(newm, roster, pencils=list(system.pencils),
                      genus_declared=g + 1)
    diag = validate_map(out, g + 1)
    if not diag.ok:
        raise AssertionError("stabilization produced an invalid map: "
                             + "; ".join(diag.violations))
    mat = intersection_matrix(out)
    span = len(mat)
    if any(mat[i][j] != (0 if i == j else 1)
           for i in range(span) for j in range(span)):
        raise AssertionError(
            "stabilized curves do not meet pairwise exactly once")
    return out
