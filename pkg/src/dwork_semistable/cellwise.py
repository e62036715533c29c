"""Cell-by-cell unimodular triangulation of a dilated triangulation.

Used when stellar refinement stalls on an empty non-unimodular simplex.
The input is first split at every lattice point, so each cell is empty.
Dilating by ``m``, unimodular cells get the staircase (Kuhn) triangulation
and every other cell is solved as a 0/1 program over unimodular simplices
whose boundary must agree with the staircase triangulation of its facets.
Staircase triangulations restrict to staircase triangulations of faces
(with the induced vertex order), so neighbouring cells fit together.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations, product
from math import comb
from typing import Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from . import lattice as lat
from .subdivide import Key, _carrier, _State, _apply, _volume, lattice_points

MAX_CANDIDATES = 80_000


class CellInfeasible(Exception):
    """No unimodular triangulation of the dilated cell with the required boundary."""


def _barycentric(key: Key, x: Sequence[int]) -> list | None:
    v0 = key[0]
    cols = [[a - b for a, b in zip(v, v0)] for v in key[1:]]
    mu = lat.solve(lat.transpose(cols), [a - b for a, b in zip(x, v0)])
    if mu is None:
        return None
    return [1 - sum(mu)] + list(mu)


def fine_cells(cells: dict[Key, int]) -> dict[Key, int]:
    """Stellar subdivision at every lattice point in lex order; every resulting cell is empty."""
    state = _State(dict(cells))
    points = sorted({x for k in cells for x in lattice_points(k)})
    for x in points:
        hosts = []
        for s in sorted(state.cells):
            w = _barycentric(s, x)
            if w is not None and all(c >= 0 for c in w):
                hosts.append(s)
        if not hosts or any(x in s for s in hosts):
            continue
        _apply(state, x, _carrier(hosts[0], x))
    return state.cells


def kuhn_triangulation(key: Key, m: int) -> list[Key]:
    """Staircase triangulation of ``m * conv(key)`` for the given vertex order.

    Points are ``m v_0 + sum y_i (v_i - v_{i-1})`` with ``m >= y_1 >= ... >= y_k >= 0``.
    """
    k = len(key) - 1
    v = [np.array(p, dtype=np.int64) for p in key]
    g = [v[i] - v[i - 1] for i in range(1, k + 1)]
    out = set()
    for a in product(range(m), repeat=k):
        for sigma in permutations(range(k)):
            y = np.array(a, dtype=np.int64)
            ys = [y.copy()]
            for i in sigma:
                y[i] += 1
                ys.append(y.copy())
            if not all(m >= t[0] and all(t[i] >= t[i + 1] for i in range(k - 1)) and t[-1] >= 0 for t in ys):
                continue
            pts = [m * v[0] + sum((t[i] * g[i] for i in range(k)), np.zeros_like(v[0])) for t in ys]
            out.add(tuple(sorted(tuple(int(c) for c in p) for p in pts)))
    return sorted(out)


def _normal_form(key: Key) -> tuple[Key, list[list[int]]]:
    """Translate ``key[0]`` to the origin and bring the edges to Hermite form.

    Returns the canonical simplex and the integer matrix ``W`` with
    ``edges @ W == canonical edges``.
    """
    v0 = key[0]
    E = [[a - b for a, b in zip(v, v0)] for v in key[1:]]
    H, U = lat.hermite_rows(lat.transpose(E))  # H = U E^T
    W = lat.transpose(U)
    L = lat.transpose(H)
    zero = tuple(0 for _ in v0)
    return (zero,) + tuple(tuple(r) for r in L), W


@lru_cache(maxsize=None)
def _solve_canonical(key: Key, m: int) -> tuple[Key, ...]:
    k = len(key) - 1
    dil = tuple(tuple(m * c for c in v) for v in key)
    pts = lattice_points(dil)
    P = np.array(pts, dtype=np.int64)
    n = len(P)
    if comb(n, k + 1) > MAX_CANDIDATES:
        raise CellInfeasible(f"{comb(n, k + 1)} candidate simplices exceed the limit {MAX_CANDIDATES}")
    idx = {p: i for i, p in enumerate(pts)}
    bary = np.array([_sign_pattern(dil, p) for p in pts], dtype=np.int64)

    tuples = np.array(list(combinations(range(n), k + 1)), dtype=np.int64)
    edges = P[tuples[:, 1:]] - P[tuples[:, [0]]]
    det = np.rint(np.linalg.det(edges.astype(float))).astype(np.int64)
    cand = tuples[np.abs(det) == 1]
    if not len(cand):
        raise CellInfeasible("no unimodular simplices")

    canonical = set()
    for cell in kuhn_triangulation(key, m):
        for f in combinations(cell, k):
            fi = tuple(sorted(idx[p] for p in f))
            if any(np.all(bary[list(fi), j] == 0) for j in range(k + 1)):
                canonical.add(fi)

    faces: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for j, q in enumerate(cand):
        for drop in range(k + 1):
            f = tuple(int(q[i]) for i in range(k + 1) if i != drop)
            F = P[list(f)]
            M = np.vstack([F[1:] - F[0], P[q[drop]] - F[0]])
            sign = 1 if np.linalg.det(M.astype(float)) > 0 else -1
            faces.setdefault(f, []).append((j, sign))

    upper = np.ones(len(cand))
    rows, cols, vals, lo, hi = [], [], [], [], []
    r = 0
    for f in sorted(faces):
        members = faces[f]
        on_boundary = any(np.all(bary[list(f), j] == 0) for j in range(k + 1))
        if on_boundary and f not in canonical:
            for j, _ in members:
                upper[j] = 0
            continue
        for j, sign in members:
            rows.append(r)
            cols.append(j)
            vals.append(1 if on_boundary else sign)
        lo.append(1 if on_boundary else 0)
        hi.append(1 if on_boundary else 0)
        r += 1
    if any(f not in faces for f in canonical):
        raise CellInfeasible("a boundary simplex has no unimodular extension")
    rows += [r] * len(cand)
    cols += list(range(len(cand)))
    vals += [1] * len(cand)
    vol = _volume(dil)
    lo.append(vol)
    hi.append(vol)
    A = coo_matrix((vals, (rows, cols)), shape=(r + 1, len(cand))).tocsr()
    res = milp(
        c=np.zeros(len(cand)),
        constraints=LinearConstraint(A, lo, hi),
        integrality=np.ones(len(cand)),
        bounds=Bounds(0, upper),
        options={"presolve": True},
    )
    if res.status != 0 or res.x is None:
        raise CellInfeasible(res.message)
    chosen = cand[res.x > 0.5]
    return tuple(sorted(tuple(pts[i] for i in q) for q in chosen))


def _sign_pattern(key: Key, x) -> list[int]:
    return [(c > 0) - (c < 0) for c in _barycentric(key, x)]


def triangulate_cell(key: Key, m: int) -> list[Key]:
    """Unimodular triangulation of ``m * conv(key)`` whose facets carry the staircase triangulation."""
    if _volume(key) == 1:
        return kuhn_triangulation(key, m)
    canon, W = _normal_form(key)
    sol = _solve_canonical(canon, m)
    Winv, det = lat.adjugate(W)  # W is unimodular, so det = +-1
    v0 = [m * c for c in key[0]]
    out = []
    for cell in sol:
        pts = []
        for y in cell:
            x = [sum(y[i] * Winv[i][j] for i in range(len(y))) * det for j in range(len(y))]
            pts.append(tuple(a + b for a, b in zip(v0, x)))
        out.append(tuple(sorted(pts)))
    return sorted(out)


def cellwise(cells: dict[Key, int], m: int) -> dict[Key, int]:
    """Unimodular triangulation of ``m`` times an empty-celled triangulation, tagged by origin."""
    out: dict[Key, int] = {}
    for key in sorted(cells):
        for c in triangulate_cell(key, m):
            out[c] = cells[key]
    return out
