"""Independent reference computations the tests check the library against.

Everything here is deliberately dumb: grid search plus interval refinement
for geometric minima, raw string enumeration for word counts, sympy for
integer normal forms.  None of it calls into the closed forms under test.
"""

import itertools
import math

import numpy as np


def _mink(x, y):
    return -x[0] * y[0] + float(np.dot(x[1:], y[1:]))


def _gpoint(base, dirv, t):
    return base * math.cosh(t) + dirv * math.sinh(t)


def _pdist(x, y):
    return math.acosh(max(1.0, -_mink(x, y)))


def foot_param_1d(p, base, dirv, lo=-40.0, hi=40.0, grid=4001, sweeps=200):
    """Parameter of the closest point on the geodesic, by grid + trisection."""
    ts = np.linspace(lo, hi, grid)
    vals = [_pdist(p, _gpoint(base, dirv, t)) for t in ts]
    k = int(np.argmin(vals))
    a = ts[max(0, k - 1)]
    b = ts[min(grid - 1, k + 1)]
    for _ in range(sweeps):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if _pdist(p, _gpoint(base, dirv, m1)) <= _pdist(p, _gpoint(base, dirv, m2)):
            b = m2
        else:
            a = m1
    return 0.5 * (a + b)


def _grid_points(base, dirv, ts):
    return np.outer(np.cosh(ts), base) + np.outer(np.sinh(ts), dirv)


def _cross_dist_matrix(P1, P2):
    inner = -(-np.outer(P1[:, 0], P2[:, 0]) + P1[:, 1:] @ P2[:, 1:].T)
    return np.arccosh(np.maximum(1.0, inner))


def perp_length_2d(b1, d1, b2, d2, lo=-40.0, hi=40.0, grid=201, sweeps=400):
    """Distance between two geodesics by 2-D grid + coordinate trisection.

    Returns (t1, t2, length).  Only trustworthy for ultraparallel pairs whose
    feet lie inside the search window.
    """
    ts = np.linspace(lo, hi, grid)
    D = _cross_dist_matrix(_grid_points(b1, d1, ts), _grid_points(b2, d2, ts))
    i, j = np.unravel_index(int(np.argmin(D)), D.shape)
    t1, t2 = ts[i], ts[j]
    step = (hi - lo) / (grid - 1)
    for _ in range(sweeps):
        # alternate 1-D trisections; step shrinks geometrically
        a, b = t1 - step, t1 + step
        for _ in range(60):
            m1 = a + (b - a) / 3.0
            m2 = b - (b - a) / 3.0
            q = _gpoint(b2, d2, t2)
            if _pdist(_gpoint(b1, d1, m1), q) <= _pdist(_gpoint(b1, d1, m2), q):
                b = m2
            else:
                a = m1
        t1 = 0.5 * (a + b)
        a, b = t2 - step, t2 + step
        for _ in range(60):
            m1 = a + (b - a) / 3.0
            m2 = b - (b - a) / 3.0
            q = _gpoint(b1, d1, t1)
            if _pdist(q, _gpoint(b2, d2, m1)) <= _pdist(q, _gpoint(b2, d2, m2)):
                b = m2
            else:
                a = m1
        t2 = 0.5 * (a + b)
        step = max(step * 0.7, 1e-13)
    return t1, t2, _pdist(_gpoint(b1, d1, t1), _gpoint(b2, d2, t2))


def min_geodesic_gap_on_grid(b1, d1, b2, d2, lo=-30.0, hi=30.0, grid=601):
    """Coarse minimum of the pairwise distance; used to screen test inputs."""
    ts = np.linspace(lo, hi, grid)
    D = _cross_dist_matrix(_grid_points(b1, d1, ts), _grid_points(b2, d2, ts))
    i, j = np.unravel_index(int(np.argmin(D)), D.shape)
    return float(D[i, j]), ts[i], ts[j]


def reduced_tuples(n, depth):
    """All distinct normal forms of words of length <= depth, by brute force.

    Enumerates every raw string over the 4n signed letters and reduces it to
    the tuple of per-factor freely reduced words.  Exponential; keep depth
    small.
    """
    letters = [(j, s, e) for j in range(1, n + 1) for s in (0, 1) for e in (1, -1)]
    seen = set()
    for k in range(depth + 1):
        for combo in itertools.product(letters, repeat=k):
            stacks = [[] for _ in range(n)]
            for (j, s, e) in combo:
                st = stacks[j - 1]
                if st and st[-1] == (s, -e):
                    st.pop()
                else:
                    st.append((s, e))
            if sum(len(st) for st in stacks) <= depth:
                seen.add(tuple(tuple(st) for st in stacks))
    return seen


def smith_diagonal(rows):
    """Diagonal of the Smith normal form of an integer matrix, via sympy."""
    from sympy import Matrix
    from sympy.matrices.normalforms import smith_normal_form

    M = Matrix(rows)
    if M.rows == 0 or M.cols == 0:
        return []
    S = smith_normal_form(M)
    diag = [int(S[i, i]) for i in range(min(S.rows, S.cols))]
    return [abs(d) for d in diag]


def homology_ranks_from_boundaries(boundaries, dims):
    """Reduced Betti numbers and torsion from integer boundary matrices.

    boundaries[k] is the matrix of d_k: C_k -> C_{k-1} (rows indexed by
    (k-1)-cells).  dims[k] is the number of k-cells.  Returns a dict
    k -> (betti_k, [torsion coefficients]).
    """
    top = len(dims) - 1
    out = {}
    for k in range(top + 1):
        dk = smith_diagonal(boundaries[k]) if k in boundaries else []
        dk1 = smith_diagonal(boundaries[k + 1]) if (k + 1) in boundaries else []
        rank_dk = sum(1 for d in dk if d != 0)
        rank_dk1 = sum(1 for d in dk1 if d != 0)
        betti = dims[k] - rank_dk - rank_dk1
        torsion = [d for d in dk1 if d not in (0, 1)]
        out[k] = (betti, torsion)
    return out


def planar_by_rotation_systems(vertices, edges):
    """Planarity by exhausting rotation systems (Euler characteristic check).

    Genus-0 embeddings exist iff some rotation system has F = E - V + 2 faces.
    Factorial blowup; only run this on graphs with few high-degree vertices.
    Assumes the graph is connected.
    """
    adj = {v: [] for v in vertices}
    for (u, v) in edges:
        adj[u].append(v)
        adj[v].append(u)
    E = len(edges)
    V = len(vertices)
    target = E - V + 2

    orders = []
    for v in vertices:
        nbrs = adj[v]
        if len(nbrs) <= 1:
            orders.append([tuple(nbrs)])
        else:
            first = nbrs[0]
            rest = nbrs[1:]
            orders.append([(first,) + p for p in itertools.permutations(rest)])

    darts = [(u, v) for (u, v) in edges] + [(v, u) for (u, v) in edges]
    for choice in itertools.product(*orders):
        rot = {v: list(order) for v, order in zip(vertices, choice)}
        nxt = {}
        for v in vertices:
            cyc = rot[v]
            for i, u in enumerate(cyc):
                # face traversal: successor of dart (u, v) is (v, w) where w
                # follows u in the rotation at v
                nxt[(u, v)] = (v, cyc[(i + 1) % len(cyc)])
        unused = set(darts)
        faces = 0
        while unused:
            d = next(iter(unused))
            while d in unused:
                unused.remove(d)
                d = nxt[d]
            faces += 1
        if faces == target:
            return True
    return False


def tree_distance_bfs(adjacency, a, b):
    """Graph distance by plain BFS; oracle for closed-form tree metrics."""
    from collections import deque

    if a == b:
        return 0
    seen = {a}
    q = deque([(a, 0)])
    while q:
        v, d = q.popleft()
        for w in adjacency[v]:
            if w == b:
                return d + 1
            if w not in seen:
                seen.add(w)
                q.append((w, d + 1))
    raise ValueError("disconnected")
