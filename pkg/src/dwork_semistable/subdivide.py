"""Unimodular subdivisions of dilated cross-sections.

The pipeline is: pulling triangulation of ``e * P`` (vertices only), then
stellar refinement at lattice points until every simplex has normalized
volume 1, trying ``e = 1, 2, ...`` in turn.  All refinement happens in
intrinsic integer coordinates of the affine lattice spanned by ``e * P``.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Any, Iterable, Sequence

import numpy as np

from . import lattice as lat
from .fan import (
    MAX_DIM,
    CrossSection,
    Polytope,
    Simplex,
    as_point,
    is_integral,
    normalized_volume,
    point_to_json,
)

DEFAULT_BUDGET = 10_000
BOX_LIMIT = 5_000_000

IntPt = tuple[int, ...]
Key = tuple[IntPt, ...]


class SubdivisionError(ValueError):
    pass


class DegenerateInput(SubdivisionError):
    pass


class BudgetExhausted(SubdivisionError):
    """Refinement stopped; ``partial`` holds the simplices reached so far."""

    def __init__(self, message: str, partial: list[Simplex], steps: int, stuck_face: Key | None = None):
        super().__init__(message)
        self.partial = partial
        self.steps = steps
        self.stuck_face = stuck_face


class NoEFound(SubdivisionError):
    def __init__(self, max_e: int, attempts: list[dict[str, Any]]):
        super().__init__(f"no dilation factor e <= {max_e} admits a unimodular subdivision")
        self.max_e = max_e
        self.attempts = attempts


# --- affine lattice frames -----------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Integral affine chart ``x = origin + y * basis`` of an affine lattice."""

    origin: IntPt
    basis: tuple[IntPt, ...]

    @classmethod
    def of(cls, points: Sequence[Sequence]) -> Frame:
        pts = [as_point(p) for p in points]
        if not all(is_integral(p) for p in pts):
            raise SubdivisionError("frame needs integral points")
        origin = tuple(int(x) for x in pts[0])
        edges = [[int(a - b) for a, b in zip(p, origin)] for p in pts[1:]]
        edges = [e for e in edges if any(e)]
        if not edges:
            return cls(origin, ())
        basis = lat.saturation_basis(edges)
        # saturation_basis spans span(edges) only when edges span it; trim to rank
        basis = [b for b in basis]
        if len(basis) != lat.rank(edges):
            raise AssertionError("saturation basis has wrong rank")
        return cls(origin, tuple(tuple(b) for b in basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_intrinsic(self, x: Sequence) -> IntPt:
        if not self.basis:
            return ()
        rhs = [Fraction(a) - b for a, b in zip(x, self.origin)]
        y = lat.solve(lat.transpose(self.basis), rhs)
        if y is None or any(c.denominator != 1 for c in y):
            raise SubdivisionError(f"{tuple(x)} is not a lattice point of the frame")
        return tuple(int(c) for c in y)

    def to_ambient(self, y: Sequence[int]) -> IntPt:
        out = list(self.origin)
        for c, b in zip(y, self.basis):
            for k, bk in enumerate(b):
                out[k] += c * bk
        return tuple(out)


# --- exact simplex helpers in Z^k ----------------------------------------------------------


def _volume(key: Key) -> int:
    """Normalized volume of an integral simplex relative to its own affine lattice."""
    if len(key) == 1:
        return 1
    v0 = key[0]
    edges = [[a - b for a, b in zip(v, v0)] for v in key[1:]]
    if len(edges) == len(v0):
        return abs(lat.int_det(edges))
    return lat.lattice_index(edges)


@lru_cache(maxsize=200_000)
def _volume_cached(key: Key) -> int:
    return _volume(key)


def lattice_points(verts: Sequence[IntPt]) -> list[IntPt]:
    """All lattice points of an integral simplex (box scan with exact integer tests)."""
    V = np.array(verts, dtype=np.int64)
    j = len(verts) - 1
    k = V.shape[1]
    lo, hi = V.min(axis=0), V.max(axis=0)
    size = int(np.prod(hi - lo + 1))
    if size > BOX_LIMIT:
        raise SubdivisionError(f"bounding box of {size} points exceeds the scan limit")
    grid = np.indices(tuple(hi - lo + 1)).reshape(k, -1).T + lo
    if j == 0:
        return [tuple(int(x) for x in V[0])]
    E = V[1:] - V[0]  # j x k, rows are edges
    _, pivots = lat.rref(E.tolist())
    rows = pivots[:j]
    A = [[int(E[c][r]) for c in range(j)] for r in rows]  # j x j: E restricted to pivot rows
    adj, det = lat.adjugate(A)
    if det < 0:
        adj, det = [[-x for x in row] for row in adj], -det
    adj = np.array(adj, dtype=np.int64)
    R = grid - V[0]
    mu = R[:, rows] @ adj.T  # det * barycentric weights of v_1..v_j
    ok = np.all(mu @ E == det * R, axis=1)
    ok &= np.all(mu >= 0, axis=1) & (mu.sum(axis=1) <= det)
    return sorted(tuple(int(x) for x in p) for p in grid[ok])


@lru_cache(maxsize=200_000)
def _is_dead(key: Key) -> bool:
    """Non-unimodular with no lattice points besides its vertices: can never be split."""
    return _volume(key) > 1 and len(lattice_points(key)) == len(key)


def _faces(key: Key) -> Iterable[Key]:
    for r in range(2, len(key) + 1):
        yield from combinations(key, r)


# --- pulling triangulation -----------------------------------------------------------------


def _polytope_of(p: CrossSection | Polytope | Sequence) -> Polytope:
    if isinstance(p, CrossSection):
        return p.polytope
    if isinstance(p, Polytope):
        return p
    return Polytope(p)


def triangulate(p: CrossSection | Polytope | Sequence) -> list[Simplex]:
    """Pulling triangulation with respect to the lexicographic vertex order.

    Every face is triangulated by pulling its lex-smallest vertex, so the
    restriction to a face does not depend on the cell it is viewed from.
    """
    try:
        P = _polytope_of(p)
    except Exception as exc:
        raise DegenerateInput(str(exc)) from None
    if len({len(x) for x in P.points}) != 1:
        raise DegenerateInput("points of different dimensions")
    if P.dim > MAX_DIM:
        raise DegenerateInput(f"dimension {P.dim} exceeds cap {MAX_DIM}")
    verts = sorted(P.vertices())
    memo: dict[frozenset[int], list[tuple[int, ...]]] = {}

    def pull(face: tuple[int, ...]) -> list[tuple[int, ...]]:
        fs = frozenset(face)
        if fs in memo:
            return memo[fs]
        pts = [verts[i] for i in face]
        sub = Polytope(pts)
        if sub.dim == 0:
            out = [(face[0],)]
        else:
            apex = min(face)
            out = []
            for facet in sub.facets():
                idx = tuple(sorted(face[f] for f in facet))
                if apex in idx:
                    continue
                # facets may carry non-vertex points only if input was not pruned
                out.extend((apex,) + s for s in pull(idx))
        memo[fs] = out
        return out

    cells = pull(tuple(range(len(verts))))
    return [Simplex([verts[i] for i in c]) for c in sorted(cells)]


# --- stellar refinement --------------------------------------------------------------------


@dataclass
class _State:
    cells: dict[Key, int]  # simplex -> originating top-level cell
    incidence: dict[Key, set[Key]] = field(default_factory=dict)
    heap: list[tuple[int, Key]] = field(default_factory=list)

    def __post_init__(self) -> None:
        for s in list(self.cells):
            self._register(s)

    def _register(self, s: Key) -> None:
        for f in _faces(s):
            holders = self.incidence.setdefault(f, set())
            if not holders and _volume_cached(f) > 1:
                heapq.heappush(self.heap, (len(f), f))
            holders.add(s)

    def _unregister(self, s: Key) -> None:
        for f in _faces(s):
            holders = self.incidence[f]
            holders.discard(s)
            if not holders:
                del self.incidence[f]

    def add(self, s: Key, cell: int) -> None:
        self.cells[s] = cell
        self._register(s)

    def remove(self, s: Key) -> int:
        cell = self.cells.pop(s)
        self._unregister(s)
        return cell

    def next_bad_face(self) -> Key | None:
        while self.heap:
            _, f = self.heap[0]
            if f in self.incidence:
                return f
            heapq.heappop(self.heap)
        return None


def _stellar_children(s: Key, face: Key, x: IntPt) -> list[Key]:
    out = []
    for v in face:
        child = tuple(sorted(x if w == v else w for w in s))
        out.append(child)
    return out


def _carrier(face: Key, x: IntPt) -> Key:
    """Vertices of ``face`` with positive barycentric weight at ``x``."""
    v0 = face[0]
    cols = [[a - b for a, b in zip(v, v0)] for v in face[1:]]
    mu = lat.solve(lat.transpose(cols), [a - b for a, b in zip(x, v0)])
    assert mu is not None
    weights = [1 - sum(mu)] + mu
    return tuple(v for v, w in zip(face, weights) if w > 0)


def _new_faces(child: Key, x: IntPt) -> Iterable[Key]:
    # faces through the new vertex that could be unsplittable (dimension >= 3)
    for f in _faces(child):
        if len(f) >= 4 and x in f:
            yield f


def _ranked_points(state: _State, face: Key) -> list[tuple[IntPt, Key]]:
    """Admissible pulling points of ``face`` in preference order.

    Preference is the smallest largest-child volume, then the lex-smallest
    point.  Points whose split would create a dead face are dropped: such a
    face has no lattice point to split it and survives every later step.  Each point is returned with
    its carrier, the face of ``face`` containing it in its relative
    interior, around which the stellar split happens.
    """
    ranked = []
    for x in lattice_points(face):
        if x in face:
            continue
        carrier = _carrier(face, x)
        children = [c for s in state.incidence[carrier] for c in _stellar_children(s, carrier, x)]
        if any(_is_dead(f) for c in children for f in _new_faces(c, x)):
            continue
        ranked.append((max(_volume(c) for c in children), x, carrier))
    ranked.sort()
    return [(x, carrier) for _, x, carrier in ranked]


def _apply(state: _State, x: IntPt, carrier: Key) -> None:
    for s in sorted(state.incidence[carrier]):
        cell = state.remove(s)
        for child in _stellar_children(s, carrier, x):
            state.add(child, cell)


def _refine(cells: dict[Key, int], budget: int) -> tuple[dict[Key, int], int]:
    state = _State(dict(cells))
    steps = 0
    while True:
        face = state.next_bad_face()
        if face is None:
            return state.cells, steps
        if steps >= budget:
            raise _Stuck("budget", state.cells, steps, face)
        options = _ranked_points(state, face)
        if not options:
            raise _Stuck("empty", state.cells, steps, face)
        _apply(state, *options[0])
        steps += 1


class _Stuck(Exception):
    def __init__(self, reason: str, cells: dict[Key, int], steps: int, face: Key):
        self.reason, self.cells, self.steps, self.face = reason, cells, steps, face


def _to_frame(simplices: Sequence[Simplex]) -> tuple[Frame, list[Key]]:
    pts = [v for s in simplices for v in s.vertices]
    if not all(is_integral(p) for p in pts):
        raise SubdivisionError("refinement needs integral simplices")
    frame = Frame.of(pts)
    keys = []
    for s in simplices:
        key = tuple(sorted(frame.to_intrinsic(v) for v in s.vertices))
        if len(key) != frame.dim + 1:
            raise DegenerateInput("simplices must be full-dimensional in their common affine span")
        keys.append(key)
    return frame, keys


def _from_frame(frame: Frame, key: Key) -> Simplex:
    return Simplex([frame.to_ambient(y) for y in key])


def refine_to_unimodular(t: Sequence[Simplex], budget: int = DEFAULT_BUDGET) -> list[Simplex]:
    """Stellar refinement of an integral triangulation into unimodular simplices.

    The face to split is the lowest-dimensional non-unimodular face (lex
    smallest among equals); it is pulled at the lex-smallest lattice point
    that minimises the largest resulting volume.  A non-unimodular face
    without extra lattice points cannot be split and ends the run.

    Raises
    ------
    BudgetExhausted
        With the partial subdivision, when ``budget`` steps are used up or
        an empty non-unimodular face blocks progress.
    """
    if not t:
        return []
    frame, keys = _to_frame(t)
    try:
        cells, _ = _refine({k: i for i, k in enumerate(keys)}, budget)
    except _Stuck as stuck:
        partial = [_from_frame(frame, k) for k in sorted(stuck.cells)]
        face = tuple(frame.to_ambient(y) for y in stuck.face)
        why = "budget exhausted" if stuck.reason == "budget" else "empty non-unimodular face"
        raise BudgetExhausted(f"{why} after {stuck.steps} steps at face {face}", partial, stuck.steps, face) from None
    return [_from_frame(frame, k) for k in sorted(cells)]


# --- semistable subdivision ----------------------------------------------------------------


@dataclass
class Subdivision:
    parent: Polytope
    e: int
    simplices: list[Simplex]
    provenance: list[dict[str, Any]]
    frame: Frame
    recession: tuple[tuple[int, ...], ...] = ()
    attempts: list[dict[str, Any]] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.frame.dim

    def intrinsic(self) -> list[Key]:
        return [tuple(sorted(self.frame.to_intrinsic(v) for v in s.vertices)) for s in self.simplices]

    def verification(self) -> dict[str, Any]:
        return verify_subdivision(self)

    def to_json(self) -> dict[str, Any]:
        return {
            "e": self.e,
            "dim": self.dim,
            "parent": [point_to_json(v) for v in self.parent.vertices()],
            "recession": [list(r) for r in self.recession],
            "simplices": [s.to_json() for s in self.simplices],
            "provenance": self.provenance,
            "attempts": self.attempts,
            "verification": self.verification(),
        }


def polytope_volume(P: Polytope) -> Fraction:
    """Exact normalized volume of ``P`` in the lattice of its affine span."""
    return sum((Fraction(normalized_volume(s)) for s in triangulate(P)), Fraction(0))


def _minimal_face(P: Polytope, verts: Sequence, e: int) -> list[int]:
    """Indices (into ``P.vertices()``) of the smallest face of ``e P`` holding ``verts``."""
    pverts = P.vertices()
    index = {v: k for k, v in enumerate(P.points)}
    vidx = [index[v] for v in pverts]
    face = set(range(len(pverts)))
    for facet in P.facets():
        members = {vidx.index(k) for k in facet if k in vidx}
        pts = [tuple(e * x for x in pverts[m]) for m in members]
        sub = Polytope(pts)
        if all(sub.contains(v) for v in verts):
            face &= members
    return sorted(face)


def _assemble(P, e, frame, cells, recession, attempts) -> Subdivision:
    ordered = sorted(cells)
    simplices = [_from_frame(frame, k) for k in ordered]
    provenance = [{"cell": cells[k], "face": _minimal_face(P, s.vertices, e)} for k, s in zip(ordered, simplices)]
    return Subdivision(P, e, simplices, provenance, frame, tuple(recession), attempts)


def semistable_subdivision(
    p: CrossSection | Polytope | Sequence,
    max_e: int = 24,
    budget: int = DEFAULT_BUDGET,
) -> Subdivision:
    """Smallest ``e`` (in the order 1, 2, ...) for which ``e P`` refines to unimodular simplices.

    Values of ``e`` that leave a vertex of ``e P`` non-integral are skipped.
    Each ``e`` is first tried by stellar refinement of the pulling
    triangulation.  When that stalls on an empty non-unimodular simplex the
    cellwise construction of :mod:`dwork_semistable.cellwise` is tried on
    the same ``e``.

    Raises
    ------
    NoEFound
        No ``e <= max_e`` worked; ``attempts`` records why each one failed.
    """
    if max_e < 1:
        raise SubdivisionError("max_e must be at least 1")
    recession = p.recession if isinstance(p, CrossSection) else ()
    P = _polytope_of(p)
    if P.dim > MAX_DIM:
        raise DegenerateInput(f"dimension {P.dim} exceeds cap {MAX_DIM}")
    base = sorted(P.vertices())
    P = Polytope(base)
    attempts: list[dict[str, Any]] = []
    D = lat.common_denominator([c for v in base for c in v])
    fine: list = []  # lazily built empty-celled triangulation of D * P
    for e in range(1, max_e + 1):
        dil = [tuple(e * x for x in v) for v in base]
        if not all(is_integral(v) for v in dil):
            attempts.append({"e": e, "status": "non-integral vertices"})
            continue
        frame, keys = _to_frame(triangulate(dil))
        try:
            cells, steps = _refine({k: i for i, k in enumerate(keys)}, budget)
        except _Stuck as stuck:
            face = [list(frame.to_ambient(y)) for y in stuck.face]
            attempts.append({"e": e, "method": "stellar", "status": stuck.reason, "steps": stuck.steps, "face": face})
        else:
            attempts.append({"e": e, "method": "stellar", "status": "ok", "steps": steps})
            return _assemble(P, e, frame, cells, recession, attempts)
        if e % D:
            continue
        from .cellwise import CellInfeasible, cellwise, fine_cells

        if not fine:
            fframe, fkeys = _to_frame(triangulate([tuple(D * x for x in v) for v in base]))
            fine.append((fframe, fine_cells({k: i for i, k in enumerate(fkeys)})))
        fframe, fcells = fine[0]
        m = e // D
        try:
            cells = cellwise(fcells, m)
        except CellInfeasible as exc:
            attempts.append({"e": e, "method": "cellwise", "status": "infeasible", "reason": str(exc)})
            continue
        attempts.append({"e": e, "method": "cellwise", "status": "ok", "cells": len(fcells)})
        frame = Frame(tuple(m * c for c in fframe.origin), fframe.basis)
        return _assemble(P, e, frame, cells, recession, attempts)
    raise NoEFound(max_e, attempts)


# --- verification ------------------------------------------------------------------------------


def verify_subdivision(sub: Subdivision) -> dict[str, Any]:
    """Exact checks: integrality, unimodularity and volume sums overall and per facet."""
    e, d = sub.e, sub.dim
    keys = sub.intrinsic()
    vols = [_volume(k) for k in keys]
    expected = polytope_volume(sub.parent) * e**d
    integral = all(is_integral(v) for s in sub.simplices for v in s.vertices)
    facets = []
    pverts = sub.parent.vertices()
    boundary: dict[Key, int] = {}
    for k in keys:
        for f in combinations(k, d):
            boundary[f] = boundary.get(f, 0) + 1
    outer = [f for f, c in boundary.items() if c == 1]
    for facet in sub.parent.facets():
        fpts = [tuple(e * x for x in sub.parent.points[i]) for i in facet]
        F = Polytope(fpts)
        want = polytope_volume(F) if d > 1 else Fraction(1)
        members = [f for f in outer if all(F.contains(sub.frame.to_ambient(y)) for y in f)]
        got = sum(_volume(f) for f in members) if d > 1 else len(members)
        facets.append({"facet": list(facet), "volume": _fmt(got), "expected": _fmt(want), "ok": got == want})
    return {
        "integral": integral,
        "all_unimodular": all(v == 1 for v in vols),
        "simplex_count": len(keys),
        "volume_sum": sum(vols),
        "expected_volume": _fmt(expected),
        "volume_ok": sum(vols) == expected,
        "facets": facets,
        "parent_vertices": len(pverts),
    }


def _fmt(x) -> int | str:
    x = Fraction(x)
    return int(x) if x.denominator == 1 else str(x)


def coverage_sample(sub: Subdivision, samples: int = 1000, seed: int = 0) -> dict[str, int]:
    """Count gaps and overlaps at random rational points of ``e P``.

    Points are random convex combinations of the dilated parent vertices
    with large integer weights, tested exactly against every simplex.
    """
    rng = random.Random(seed)
    keys = sub.intrinsic()
    d = sub.dim
    pv = [sub.frame.to_intrinsic(tuple(sub.e * x for x in v)) for v in sub.parent.vertices()]
    if d == 0:
        return {"samples": samples, "gaps": 0, "overlaps": 0, "boundary": 0}
    v0 = np.array([k[0] for k in keys], dtype=object)
    adjs, dets = [], []
    for k in keys:
        E = [[k[i + 1][r] - k[0][r] for i in range(d)] for r in range(d)]  # columns are edges
        adj, det = lat.adjugate(E)
        if det < 0:
            adj, det = [[-x for x in row] for row in adj], -det
        adjs.append(adj)
        dets.append(det)
    A = np.array(adjs, dtype=object)
    D = np.array(dets, dtype=object)
    gaps = overlaps = boundary = 0
    for _ in range(samples):
        w = [rng.randrange(1, 10**6) for _ in pv]
        W = sum(w)
        z = np.array([sum(wi * v[r] for wi, v in zip(w, pv)) for r in range(d)], dtype=object)
        rel = z[None, :] - W * v0  # (S, d), scaled by W
        mu = np.einsum("sij,sj->si", A, rel)  # det * W * barycentric of v_1..v_d
        mu0 = D * W - mu.sum(axis=1)
        full = np.concatenate([mu0[:, None], mu], axis=1)
        inside = np.all(full >= 0, axis=1)
        strict = np.all(full > 0, axis=1)
        n_in, n_strict = int(inside.sum()), int(strict.sum())
        if n_in == 0:
            gaps += 1
        if n_strict > 1:
            overlaps += 1
        if n_strict == 0 and n_in > 0:
            boundary += 1
    return {"samples": samples, "gaps": gaps, "overlaps": overlaps, "boundary": boundary}


def coned_simplex(sub: Subdivision, s: Simplex) -> tuple[list[tuple[int, ...]], tuple[int, ...], tuple[int, ...]]:
    """Generators, ``S`` and ``U`` for the cone over a cell of ``sub``.

    Cells are lifted to height 1 in ``Z + Z^k`` (intrinsic coordinates),
    so ``S`` (the first coordinate functional) is 1 on every generator; a
    final coordinate carries the unit ``U``.
    """
    k = sub.dim
    gens = [(1,) + sub.frame.to_intrinsic(v) + (0,) for v in s.vertices]
    S = (1,) + (0,) * (k + 1)
    U = (0,) * (k + 1) + (1,)
    return gens, S, U
