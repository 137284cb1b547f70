"""Exact discrete ergodic optimization on subshifts of finite type.

Window potentials on an SFT play the role of the Lagrangian plus critical
value.  The module computes minimizing cycles (Karp dynamic program in exact
rational arithmetic), pairwise barrier potentials, Aubry sets, sub-actions,
class-I periodic-orbit search by cut-and-reclose, and the channel
perturbation that locks a chosen orbit into the Aubry set of the perturbed
potential, with certificate-grade verification.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .sft import Sft, SymbolicOrbit, shift_distance

MAX_BLOCK_WORDS = 300_000


class ErgoptError(ValueError):
    """Raised on invalid potentials, parameters, or detected negative cycles."""


def _rat(x) -> Fraction:
    """Exact conversion to Fraction (floats converted by binary value)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


# ---------------------------------------------------------------------------
# potentials and block graphs
# ---------------------------------------------------------------------------


def _allowed_words(sft: Sft, length: int) -> list:
    words = [(a,) for a in range(sft.alphabet_size)]
    for _ in range(length - 1):
        nxt = []
        for w in words:
            for b in sft.successors(w[-1]):
                nxt.append(w + (int(b),))
            if len(nxt) > MAX_BLOCK_WORDS:
                raise ErgoptError(
                    f"block enumeration exceeds {MAX_BLOCK_WORDS} words")
        words = nxt
    return words


@dataclass
class EdgePotential:
    """A cost per allowed w-word (window potential) on an SFT."""

    sft: Sft
    window: int
    values: dict

    def __post_init__(self):
        if self.window < 2:
            raise ErgoptError("window must be >= 2")
        self.values = {tuple(k): _rat(v) for k, v in self.values.items()}
        allowed = set(_allowed_words(self.sft, self.window))
        if set(self.values) != allowed:
            missing = allowed - set(self.values)
            extra = set(self.values) - allowed
            raise ErgoptError(
                f"values must cover exactly the allowed {self.window}-words "
                f"(missing {len(missing)}, extra {len(extra)})")

    def cost(self, word: tuple) -> Fraction:
        """Cost charged to a step whose trailing window is the given word."""
        return self.values[tuple(word[-self.window:])]

    def to_json(self) -> str:
        dense = self.sft.transitions
        if not isinstance(dense, np.ndarray):
            dense = self.sft.csr.toarray()
        return json.dumps({
            "alphabet_size": self.sft.alphabet_size,
            "transitions": dense.astype(int).tolist(),
            "window": self.window,
            "values": {",".join(map(str, k)): str(v)
                       for k, v in self.values.items()},
        })

    @classmethod
    def from_json(cls, text: str) -> "EdgePotential":
        obj = json.loads(text)
        sft = Sft(alphabet_size=int(obj["alphabet_size"]),
                  transitions=np.array(obj["transitions"]))
        values = {tuple(int(s) for s in k.split(",")): Fraction(v)
                  for k, v in obj["values"].items()}
        return cls(sft=sft, window=int(obj["window"]), values=values)


def potential_from_edges(sft: Sft, costs: dict) -> EdgePotential:
    """Convenience constructor for window-2 potentials from an edge dict."""
    return EdgePotential(sft=sft, window=2, values=costs)


def combine(f: EdgePotential, phi: EdgePotential) -> EdgePotential:
    """The potential f + phi on the larger of the two windows."""
    if f.sft is not phi.sft and f.sft.to_json() != phi.sft.to_json():
        raise ErgoptError("potentials live on different subshifts")
    w = max(f.window, phi.window)
    words = _allowed_words(f.sft, w)
    values = {word: f.cost(word) + phi.cost(word) for word in words}
    return EdgePotential(sft=f.sft, window=w, values=values)


class _BlockGraph:
    """The de Bruijn-style graph of (w-1)-words with per-edge costs."""

    def __init__(self, f: EdgePotential):
        self.f = f
        self.w = f.window
        verts = sorted(set(word[:-1] for word in f.values)
                       | set(word[1:] for word in f.values))
        self.vertices = verts
        self.index = {v: i for i, v in enumerate(verts)}
        self.succ = [[] for _ in verts]
        self.edges = []
        for word, cost in sorted(f.values.items()):
            a, b = self.index[word[:-1]], self.index[word[1:]]
            self.succ[a].append((b, cost, word))
            self.edges.append((a, b, cost, word))

    def orbit_cycle(self, orbit: SymbolicOrbit) -> list:
        """Vertex indices visited by the periodic word (length = period)."""
        y, p, k = orbit.word, orbit.period, self.w - 1
        out = []
        for i in range(p):
            v = tuple(y[(i + j) % p] for j in range(k))
            if v not in self.index:
                raise ErgoptError(f"orbit window {v} not in block graph")
            out.append(self.index[v])
        return out

    def sparse(self) -> csr_matrix:
        n = len(self.vertices)
        rows = [a for a, b, _, _ in self.edges]
        cols = [b for a, b, _, _ in self.edges]
        return csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                          shape=(n, n))


# ---------------------------------------------------------------------------
# minimizing cycles
# ---------------------------------------------------------------------------


@dataclass
class CycleMeasure:
    """A minimizing periodic orbit together with its mean cost per symbol."""

    cycle: SymbolicOrbit
    mean: Fraction

    def recompute_mean(self, f: EdgePotential) -> Fraction:
        y, p = self.cycle.word, self.cycle.period
        total = sum(f.cost(tuple(y[(i + j) % p]
                                 for j in range(f.window)))
                    for i in range(p))
        return Fraction(total, p) if isinstance(total, (int, Fraction)) \
            else total / p


def orbit_mean(f: EdgePotential, orbit: SymbolicOrbit) -> Fraction:
    """Mean cost per symbol of a periodic word under a window potential."""
    y, p = orbit.word, orbit.period
    total = sum(f.cost(tuple(y[(i - f.window + 1 + j) % p]
                             for j in range(f.window)))
                for i in range(p))
    return total / p if not isinstance(total, (int, Fraction)) \
        else Fraction(total, p)


def _karp_min_mean(graph: _BlockGraph, members: list):
    """Karp dynamic program restricted to one strongly connected component.

    Returns the exact minimum cycle mean within the component.
    """
    sub = {v: [(b, c) for (b, c, _) in graph.succ[v] if b in members]
           for v in members}
    n = len(members)
    order = sorted(members)
    pos = {v: i for i, v in enumerate(order)}
    inf = None
    d = [[inf] * n for _ in range(n + 1)]
    src = order[0]
    d[0][pos[src]] = Fraction(0)
    for k in range(1, n + 1):
        dk, dk1 = d[k], d[k - 1]
        for v in order:
            dv = dk1[pos[v]]
            if dv is None:
                continue
            for b, c in sub[v]:
                cand = dv + c
                j = pos[b]
                if dk[j] is None or cand < dk[j]:
                    dk[j] = cand
    best = None
    for v in order:
        j = pos[v]
        if d[n][j] is None:
            continue
        worst = None
        for k in range(n):
            if d[k][j] is None:
                continue
            val = Fraction(d[n][j] - d[k][j], n - k)
            if worst is None or val > worst:
                worst = val
        if worst is not None and (best is None or worst < best):
            best = worst
    return best


def _feasible_potential(graph: _BlockGraph, mean: Fraction):
    """Bellman-Ford distances for costs - mean from a virtual source.

    Returns (pi, negative_cycle); pi satisfies cost - mean + pi[a] - pi[b] >= 0
    on every edge when no negative cycle exists, otherwise the cycle (as a
    vertex list) is returned.
    """
    from collections import deque

    n = len(graph.vertices)
    # scale reduced costs to integers for speed; exactness is preserved
    denom = mean.denominator
    for _, _, c, _ in graph.edges:
        denom = denom * c.denominator // math.gcd(denom, c.denominator)
    adj = [[] for _ in range(n)]
    for a, b, c, _ in graph.edges:
        adj[a].append((b, int((c - mean) * denom)))
    pi = [0] * n
    pred = [-1] * n
    count = [0] * n
    inq = [True] * n
    queue = deque(range(n))
    overflow = None
    while queue:
        a = queue.popleft()
        inq[a] = False
        pa = pi[a]
        for b, c in adj[a]:
            cand = pa + c
            if cand < pi[b]:
                pi[b] = cand
                pred[b] = a
                count[b] += 1
                if count[b] > n:
                    overflow = b
                    queue.clear()
                    break
                if not inq[b]:
                    inq[b] = True
                    queue.append(b)
        if overflow is not None:
            break
    if overflow is None:
        return [Fraction(p, denom) for p in pi], None
    # negative cycle: walk predecessors far enough to land on the cycle
    v = overflow
    for _ in range(n):
        v = pred[v]
    cycle, cur = [v], pred[v]
    while cur != v:
        cycle.append(cur)
        cur = pred[cur]
    cycle.reverse()
    return None, cycle


def _tight_subgraph(graph: _BlockGraph, mean: Fraction, pi: list):
    """Edges with zero reduced cost relative to the feasible potential."""
    tight = [[] for _ in graph.vertices]
    for a, b, c, word in graph.edges:
        if c - mean + pi[a] - pi[b] == 0:
            tight[a].append((b, word))
    return tight


def _cycles_vertex_set(tight: list):
    """Vertices lying on some cycle of the tight subgraph."""
    n = len(tight)
    rows, cols = [], []
    for a, outs in enumerate(tight):
        for b, _ in outs:
            rows.append(a)
            cols.append(b)
    if not rows:
        return set(), None
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                     shape=(n, n))
    n_comp, labels = connected_components(mat, directed=True,
                                          connection="strong")
    counts = np.bincount(labels, minlength=n_comp)
    on_cycle = set()
    for a, outs in enumerate(tight):
        for b, _ in outs:
            if a == b:
                on_cycle.add(a)
            elif labels[a] == labels[b] and counts[labels[a]] >= 2:
                on_cycle.add(a)
                on_cycle.add(b)
    return on_cycle, labels


def _extract_tight_cycle(tight: list, allowed: set) -> list:
    """Walk tight edges inside the allowed vertex set until a vertex repeats."""
    start = next(iter(allowed))
    seen = {}
    path = []
    v = start
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        for b, _ in tight[v]:
            if b in allowed:
                v = b
                break
        else:
            raise AssertionError("tight walk left the cycle set")
    return path[seen[v]:]


def _vertices_to_orbit(graph: _BlockGraph, cycle: list) -> SymbolicOrbit:
    """Convert a block-vertex cycle to the underlying symbol word."""
    word = tuple(graph.vertices[v][-1] for v in cycle)
    return SymbolicOrbit(word=word, sft=graph.f.sft)


def _cycle_mean_exact(graph: _BlockGraph, cycle: list) -> Fraction:
    cost_of = {(a, b): c for a, b, c, _ in graph.edges}
    p = len(cycle)
    total = sum(cost_of[(cycle[i], cycle[(i + 1) % p])] for i in range(p))
    return Fraction(total, p)


def _greedy_seed_cycle(graph: _BlockGraph) -> list:
    """The best cycle of the min-cost out-edge policy, used only to seed the
    exact descent, so a suboptimal seed cannot affect correctness."""
    n = len(graph.vertices)
    policy = [None] * n
    for a in range(n):
        outs = graph.succ[a]
        if outs:
            policy[a] = min(outs, key=lambda e: e[1])[0]
    best_cycle, best_mean = None, None
    color = [0] * n
    for start in range(n):
        if color[start]:
            continue
        path, pos = [], {}
        v = start
        while v is not None and color[v] == 0 and v not in pos:
            pos[v] = len(path)
            path.append(v)
            v = policy[v]
        if v is not None and v in pos:
            cycle = path[pos[v]:]
            mean = _cycle_mean_exact(graph, cycle)
            if best_mean is None or mean < best_mean:
                best_cycle, best_mean = cycle, mean
        for u in path:
            color[u] = 1
    if best_cycle is None:
        raise ErgoptError("no cycle in the block graph")
    return best_cycle


def min_mean_cycle(f: EdgePotential) -> CycleMeasure:
    """A cycle of exactly minimal mean cost.

    Small graphs run Karp's dynamic program in exact rational arithmetic;
    large graphs are seeded by the greedy out-edge policy.  Either way the
    candidate mean is certified by an exact Bellman-Ford feasibility check,
    descending along any negative reduced cycle it uncovers, so the result
    is exact regardless of how it was seeded.
    """
    graph = _BlockGraph(f)
    mat = graph.sparse()
    n = len(graph.vertices)
    if n <= 80:
        n_comp, labels = connected_components(mat, directed=True,
                                              connection="strong")
        diag = mat.diagonal()
        best = None
        for c in range(n_comp):
            members = set(np.nonzero(labels == c)[0].tolist())
            if len(members) == 1:
                v = next(iter(members))
                if not diag[v]:
                    continue
            mean = _karp_min_mean(graph, members)
            if mean is not None and (best is None or mean < best):
                best = mean
        if best is None:
            raise ErgoptError("no cycle in the block graph")
    else:
        best = _cycle_mean_exact(graph, _greedy_seed_cycle(graph))
    # certify: descend along negative reduced cycles until none remain
    for _ in range(1 + len(graph.edges)):
        pi, neg = _feasible_potential(graph, best)
        if neg is None:
            break
        lower = _cycle_mean_exact(graph, neg)
        assert lower < best, "descent step failed to decrease the mean"
        best = lower
    else:
        raise AssertionError("mean descent did not terminate")
    tight = _tight_subgraph(graph, best, pi)
    on_cycle, _ = _cycles_vertex_set(tight)
    cycle = _extract_tight_cycle(tight, on_cycle)
    orbit = _vertices_to_orbit(graph, cycle).primitive()
    assert orbit_mean(f, orbit) == best, "witness cycle mean mismatch"
    return CycleMeasure(cycle=orbit, mean=best)


# ---------------------------------------------------------------------------
# barriers, Aubry set, sub-actions
# ---------------------------------------------------------------------------


def discrete_mane_potential(f: EdgePotential, m) -> dict:
    """Pairwise barrier Phi(a, b) = min reduced cost of an a -> b path with at
    least one edge, as a dict keyed by (w-1)-word pairs.

    Raises when m is below the true minimum mean, naming a negative cycle.
    """
    m = _rat(m)
    graph = _BlockGraph(f)
    pi, neg = _feasible_potential(graph, m)
    if neg is not None:
        word = tuple(graph.vertices[v][-1] for v in neg)
        raise ErgoptError(
            f"negative reduced cycle detected (m too small): word {word}")
    n = len(graph.vertices)
    inf = None
    dist = [[inf] * n for _ in range(n)]
    for a, b, c, _ in graph.edges:
        red = c - m
        if dist[a][b] is None or red < dist[a][b]:
            dist[a][b] = red
    for k in range(n):
        dk = dist[k]
        for a in range(n):
            dak = dist[a][k]
            if dak is None:
                continue
            da = dist[a]
            for b in range(n):
                if dk[b] is None:
                    continue
                cand = dak + dk[b]
                if da[b] is None or cand < da[b]:
                    da[b] = cand
    verts = graph.vertices
    return {(verts[a], verts[b]): dist[a][b]
            for a in range(n) for b in range(n) if dist[a][b] is not None}


@dataclass
class DiscreteAubry:
    """Aubry data: vertices with zero self-barrier and the tight subgraph."""

    vertices: list
    tight_edges: list
    mean: Fraction
    classes: list = field(default_factory=list)

    def contains_vertex(self, v: tuple) -> bool:
        return tuple(v) in set(self.vertices)


def discrete_aubry(f: EdgePotential, m) -> DiscreteAubry:
    """Vertices with Phi(a, a) = 0, i.e. those on zero-mean reduced cycles,
    together with the tight edges and the static-class partition."""
    m = _rat(m)
    phi = discrete_mane_potential(f, m)
    verts = sorted({a for (a, _) in phi} | {b for (_, b) in phi})
    aubry = [a for a in verts if phi.get((a, a)) == 0]
    aubry_set = set(aubry)
    tight = []
    for word in f.values:
        a, b = word[:-1], word[1:]
        if a in aubry_set and b in aubry_set:
            back = phi.get((b, a))
            if back is not None and f.values[word] - m + back == 0:
                tight.append(word)
    # static classes: Phi(a,b) + Phi(b,a) = 0
    classes, assigned = [], set()
    for a in aubry:
        if a in assigned:
            continue
        cls = [b for b in aubry
               if phi.get((a, b)) is not None and phi.get((b, a)) is not None
               and phi[(a, b)] + phi[(b, a)] == 0]
        classes.append(sorted(cls))
        assigned.update(cls)
    out = DiscreteAubry(vertices=aubry, tight_edges=tight, mean=m,
                        classes=classes)
    # every Aubry vertex must lie on a cycle within the tight edges
    succ = {}
    for word in tight:
        succ.setdefault(word[:-1], []).append(word[1:])
    for a in aubry:
        assert _on_tight_cycle(a, succ), f"Aubry vertex {a} not on tight cycle"
    return out


def _on_tight_cycle(a: tuple, succ: dict) -> bool:
    frontier, seen = [a], set()
    while frontier:
        v = frontier.pop()
        for b in succ.get(v, ()):
            if b == a:
                return True
            if b not in seen:
                seen.add(b)
                frontier.append(b)
    return False


@dataclass
class SubAction:
    """A dominated function on (w-1)-words, calibrated on tight cycles."""

    values: dict
    mean: Fraction

    def check(self, f: EdgePotential, aubry: DiscreteAubry = None) -> bool:
        for word, c in f.values.items():
            a, b = word[:-1], word[1:]
            if self.values[b] - self.values[a] > c - self.mean:
                return False
        if aubry is not None:
            for word in aubry.tight_edges:
                a, b = word[:-1], word[1:]
                if self.values[b] - self.values[a] != f.values[word] - self.mean:
                    return False
        return True


def sub_action(f: EdgePotential, m) -> SubAction:
    """u(b) = min over Aubry-rooted paths of the reduced cost to b, extended
    to vertices that cannot be reached from the Aubry set by the backward
    domination envelope.  Exact rational arithmetic."""
    m = _rat(m)
    aubry = discrete_aubry(f, m)
    graph = _BlockGraph(f)
    n = len(graph.vertices)
    u = {v: None for v in graph.vertices}
    for a in aubry.vertices:
        u[a] = Fraction(0)
    rounds = 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        assert rounds <= n + 1, "sub-action iteration exceeded vertex count"
        for word, c in f.values.items():
            a, b = word[:-1], word[1:]
            if u[a] is None:
                continue
            cand = u[a] + c - m
            if u[b] is None or cand < u[b]:
                u[b] = cand
                changed = True
    # vertices not reachable from the Aubry set: push the envelope backward
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        assert rounds <= n + 1
        for word, c in f.values.items():
            a, b = word[:-1], word[1:]
            if u[b] is None or u[a] is not None:
                continue
            u[a] = u[b] - (c - m)
            changed = True
    for v, val in u.items():
        if val is None:
            raise ErgoptError(f"vertex {v} disconnected from the Aubry set")
    # backward-filled vertices may still violate domination on some edge;
    # relax downward until dominated (plain Bellman-Ford, so it terminates
    # in at most n passes given no negative reduced cycles)
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        assert rounds <= n + 1
        for word, c in f.values.items():
            a, b = word[:-1], word[1:]
            cand = u[a] + c - m
            if u[b] > cand:
                u[b] = cand
                changed = True
    out = SubAction(values=u, mean=m)
    assert out.check(f, aubry), "sub-action invariants failed"
    return out


# ---------------------------------------------------------------------------
# orbit metrics and the class-I condition
# ---------------------------------------------------------------------------


def _aubry_match_radius(word: tuple, i: int, aubry: DiscreteAubry,
                        window: int, cap: int) -> int:
    """Largest r such that the radius-r window of the orbit around index i is
    consistent with a tight path (hence within 2^{-r} of an Aubry point);
    -1 when not even the central vertex is an Aubry vertex."""
    p = len(word)
    aset = set(aubry.vertices)
    tight = set(aubry.tight_edges)

    def vertex_at(k):
        return tuple(word[(k - window + 2 + j) % p] for j in range(window - 1))

    def edge_at(k):
        return tuple(word[(k - window + 1 + j) % p] for j in range(window))

    best = -1
    for r in range(cap + 1):
        lo, hi = i - r, i + r
        verts_ok = all(vertex_at(k) in aset
                       for k in range(lo + window - 2, hi + 1))
        edges_ok = all(edge_at(k) in tight
                       for k in range(lo + window - 1, hi + 1))
        if not (verts_ok and edges_ok):
            break
        best = r
    return best


def orbit_metrics(orbit: SymbolicOrbit, f: EdgePotential,
                  aubry: DiscreteAubry) -> tuple:
    """(gap, aubry_distance, reduced_action) for a periodic word.

    gap is the minimal shift-metric distance between distinct time shifts of
    the orbit (0 for a fixed point, whose shifts coincide); aubry_distance is
    the maximal distance from an orbit point to the Aubry set; the reduced
    action is the total cost minus mean over one period and is nonnegative.
    """
    y, p = orbit.word, orbit.period
    cap = 2 * p + 4
    if p < 2:
        gap = 0.0
    else:
        gap = min(shift_distance(y, i, y, j, radius_cap=cap)
                  for i in range(p) for j in range(i + 1, p))
    dists = []
    for i in range(p):
        r = _aubry_match_radius(y, i, aubry, f.window, cap=cap + f.window)
        dists.append(0.0 if r >= cap else 2.0 ** (-r) if r >= 0 else 2.0)
    c_dist = max(dists)
    action = orbit_mean(f, orbit) * p - aubry.mean * p
    assert action >= 0, "negative reduced action"
    return gap, c_dist, action


def alga_condition(orbit: SymbolicOrbit, f: EdgePotential,
                   aubry: DiscreteAubry, eps: float) -> dict:
    """Both class-I inequalities: c < eps*gap and A < eps^2*gap^2.

    A side that is 0 = 0 counts as satisfied (the fixed-point orbit has all
    quantities zero and the condition holds vacuously).
    """
    gap, c_dist, action = orbit_metrics(orbit, f, aubry)
    lhs_ok = c_dist < eps * gap or (c_dist == 0)
    rhs_ok = float(action) < (eps * gap) ** 2 or (action == 0)
    return {"gap": gap, "aubry_distance": c_dist, "reduced_action": action,
            "holds": bool(lhs_ok and rhs_ok)}


def _closest_self_approach(word: tuple) -> tuple:
    """Pair (i, j), i < j, minimizing the shift distance; ties prefer the
    pair giving the smallest cut period min(j - i, p - (j - i))."""
    p = len(word)
    best = None
    for i in range(p):
        for j in range(i + 1, p):
            d = shift_distance(word, i, word, j, radius_cap=2 * p + 4)
            cut = min(j - i, p - (j - i))
            key = (d, cut, i, j)
            if best is None or key < best:
                best = key
    return best[2], best[3], best[0]


def _shortest_symbol_path(sft: Sft, a: int, b: int) -> list:
    """Shortest path a -> b (list of intermediate symbols, possibly empty)."""
    if sft.allows(a, b):
        return []
    frontier = {a: []}
    seen = {a}
    for _ in range(sft.alphabet_size + 1):
        nxt = {}
        for v, path in frontier.items():
            for s in sft.successors(v):
                s = int(s)
                if sft.allows(s, b):
                    return path + [s]
                if s not in seen:
                    seen.add(s)
                    nxt[s] = path + [s]
        frontier = nxt
        if not frontier:
            break
    raise ErgoptError(f"no path from {a} to {b}")


def class_one_search(f: EdgePotential, eps: float) -> SymbolicOrbit:
    """Cut-and-reclose search for an orbit satisfying both class-I bounds.

    Starts from a tight cycle padded with a detour through a non-Aubry vertex
    (so the loop has work to do when the graph allows it); while the
    condition fails, the closest self-approach pair is located, the shorter
    arc is cut away, and the word is re-closed through a shortest symbolic
    path.  The period at least nearly halves each round, so the round count
    is logarithmic; if cutting bottoms out, the tight cycle itself is
    returned (it satisfies the condition exactly).
    """
    if not 0 < eps < 1:
        raise ErgoptError("eps must lie in (0, 1)")
    mm = min_mean_cycle(f)
    aubry = discrete_aubry(f, mm.mean)
    tight_orbit = mm.cycle
    start = _padded_start(f, tight_orbit, aubry)
    orbit = start
    rounds, max_rounds = 0, max(1, math.ceil(
        math.log(max(start.period, 2)) / math.log(1.25))) + 1
    while not alga_condition(orbit, f, aubry, eps)["holds"]:
        rounds += 1
        assert rounds <= max_rounds, "class-I loop exceeded its round budget"
        p = orbit.period
        if p <= 2:
            orbit = tight_orbit
            break
        i, j, _ = _closest_self_approach(orbit.word)
        arc = min(j - i, p - (j - i))
        if j - i <= p - (j - i):
            seg = list(orbit.word[i:j])
        else:
            seg = list(orbit.word[j:] + orbit.word[:i])
        bridge = _shortest_symbol_path(f.sft, seg[-1], seg[0])
        new_word = tuple(seg + bridge)
        if len(new_word) >= p:
            orbit = tight_orbit
            break
        orbit = SymbolicOrbit(word=new_word, sft=f.sft).primitive()
    result = alga_condition(orbit, f, aubry, eps)
    assert result["holds"], "returned orbit fails the class-I condition"
    return orbit


def _padded_start(f: EdgePotential, tight_orbit: SymbolicOrbit,
                  aubry: DiscreteAubry) -> SymbolicOrbit:
    """Tight cycle repeated, with a detour through a non-Aubry symbol when
    the graph provides one reachable in both directions."""
    sft = f.sft
    aubry_symbols = {v[-1] for v in aubry.vertices}
    outside = [s for s in range(sft.alphabet_size) if s not in aubry_symbols]
    base = tight_orbit.word
    a0 = base[0]
    for s in outside:
        try:
            path_out = _shortest_symbol_path(sft, base[-1], s)
            path_back = _shortest_symbol_path(sft, s, a0)
        except ErgoptError:
            continue
        word = base * 4 + tuple(path_out) + (s,) + tuple(path_back)
        return SymbolicOrbit(word=word, sft=sft)
    return tight_orbit


# ---------------------------------------------------------------------------
# channel perturbation and locking
# ---------------------------------------------------------------------------


def _orbit_windows(orbit: SymbolicOrbit, length: int) -> set:
    y, p = orbit.word, orbit.period
    return {tuple(y[(i + j) % p] for j in range(length)) for i in range(p)}


def _centered_match_radius(word: tuple, orbit: SymbolicOrbit) -> int:
    """Largest r with the radius-r window around the center of `word`
    matching the orbit at some phase; -1 when even the center mismatches
    everywhere; len(word)//2 means the whole word occurs in the orbit."""
    r_max = len(word) // 2
    y, p = orbit.word, orbit.period
    best = -1
    for q in range(p):
        r = -1
        for rr in range(r_max + 1):
            ok = all(word[r_max + k] == y[(q + k) % p]
                     for k in ([0] if rr == 0 else [rr, -rr]))
            if not ok:
                break
            r = rr
        best = max(best, r)
    return best


def build_channel_discrete(orbit: SymbolicOrbit, eps, rho=None,
                           gamma_bar=None) -> EdgePotential:
    """The locking perturbation: a window potential measuring the capped
    squared shift-metric distance to the orbit.

    phi(word) = eps/2 * min(d, gamma_bar/4)^2 with d = 2^{1-r} for the
    centered match radius r against the orbit; phi vanishes exactly on the
    orbit's windows.  Defaults gamma_bar = gap/4 and rho = gamma_bar/8
    respect the required ordering rho < gamma_bar/4 < gap/2.
    """
    sft = orbit.sft
    if sft is None:
        raise ErgoptError("orbit must carry its subshift")
    p = orbit.period
    if gamma_bar is None or rho is None:
        cap = 2 * p + 4
        gap = 0.0 if p < 2 else min(
            shift_distance(orbit.word, i, orbit.word, j, radius_cap=cap)
            for i in range(p) for j in range(i + 1, p))
        if gap == 0:
            raise ErgoptError(
                "orbit gap is zero; pass rho and gamma_bar explicitly")
        if gamma_bar is None:
            gamma_bar = Fraction(gap).limit_denominator(1 << 30) / 4
        if rho is None:
            rho = _rat(gamma_bar) / 8
    eps, rho, gamma_bar = _rat(eps), _rat(rho), _rat(gamma_bar)
    if not rho < gamma_bar / 4:
        raise ErgoptError(
            f"parameter ordering violated: rho = {rho} must be < "
            f"gamma_bar/4 = {gamma_bar / 4}")
    if p >= 2:
        cap = 2 * p + 4
        gap = min(shift_distance(orbit.word, i, orbit.word, j, radius_cap=cap)
                  for i in range(p) for j in range(i + 1, p))
        if not gamma_bar / 4 < Fraction(gap).limit_denominator(1 << 30) / 2:
            raise ErgoptError(
                f"parameter ordering violated: gamma_bar/4 = {gamma_bar / 4} "
                f"must be < gap/2 = {gap / 2}")
    # window long enough to resolve the cap and to pin the orbit's phase
    r_cap = max(1, math.ceil(1 - math.log2(float(gamma_bar) / 4)))
    r_max = max(r_cap, p + 1)
    length = 2 * r_max + 1
    words = _allowed_words(sft, length)
    cap_d = gamma_bar / 4
    values = {}
    for word in words:
        r = _centered_match_radius(word, orbit)
        if r >= r_max:
            values[word] = Fraction(0)
        else:
            d = Fraction(2) ** (1 - (r + 1))
            values[word] = eps / 2 * min(d, cap_d) ** 2
    return EdgePotential(sft=sft, window=length, values=values)


def verify_locking(f: EdgePotential, phi: EdgePotential,
                   orbit: SymbolicOrbit):
    """Whether the orbit is the unique minimizing cycle of f + phi.

    Exact computation: minimum mean by Karp, feasible potential by
    Bellman-Ford, and the set of all minimizing cycles as the cycles of the
    tight subgraph.  Returns (locked, certificate); on failure the
    certificate carries a competing cycle of equal or smaller mean.
    """
    g = combine(f, phi)
    graph = _BlockGraph(g)
    mm = min_mean_cycle(g)
    gamma_cycle = graph.orbit_cycle(orbit)
    gamma_mean = orbit_mean(g, orbit)
    cert = {"mean": str(mm.mean), "orbit_mean": str(gamma_mean)}
    if gamma_mean > mm.mean:
        cert["competing_cycle"] = list(mm.cycle.word)
        cert["reason"] = "orbit mean above optimum"
        return False, cert
    pi, neg = _feasible_potential(graph, mm.mean)
    assert neg is None
    tight = _tight_subgraph(graph, mm.mean, pi)
    on_cycle, _ = _cycles_vertex_set(tight)
    gamma_set = set(gamma_cycle)
    if on_cycle != gamma_set:
        extra = on_cycle - gamma_set
        allowed = extra if extra else on_cycle
        comp = _extract_tight_cycle(tight, allowed)
        cert["competing_cycle"] = list(
            _vertices_to_orbit(graph, comp).word)
        cert["reason"] = "another minimizing cycle exists"
        return False, cert
    # within the orbit's vertex set the tight edges must be the single cycle
    gamma_edges = set()
    p = len(gamma_cycle)
    for i in range(p):
        gamma_edges.add((gamma_cycle[i], gamma_cycle[(i + 1) % p]))
    for a in gamma_set:
        for b, _ in tight[a]:
            if b in gamma_set and (a, b) not in gamma_edges:
                cert["reason"] = "extra tight edge inside orbit set"
                cert["competing_edge"] = [list(graph.vertices[a]),
                                          list(graph.vertices[b])]
                return False, cert
    cert["reason"] = "unique minimizing cycle"
    return True, cert


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def random_instance(rng: np.random.Generator, alphabet: int = 4,
                    out_degree: int = 2, denominator: int = 16) -> EdgePotential:
    """A random strongly usable window-2 potential with rational costs."""
    m = alphabet
    for _ in range(200):
        t = np.zeros((m, m), dtype=np.int8)
        for a in range(m):
            deg = int(rng.integers(1, out_degree + 1))
            for b in rng.choice(m, size=deg, replace=False):
                t[a, int(b)] = 1
        # ensure every column has an entry
        for b in range(m):
            if t[:, b].sum() == 0:
                t[int(rng.integers(0, m)), b] = 1
        try:
            sft = Sft(alphabet_size=m, transitions=t)
        except Exception:
            continue
        costs = {}
        for a in range(m):
            for b in sft.successors(a):
                costs[(a, int(b))] = Fraction(
                    int(rng.integers(0, 4 * denominator)), denominator)
        return potential_from_edges(sft, costs)
    raise ErgoptError("failed to sample a valid instance")
