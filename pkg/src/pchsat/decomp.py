"""Tree decompositions of primal graphs: computation, nice form, checking.

Decompositions are computed from elimination orders (greedy min-fill by
default, exact subset dynamic programming for small graphs).  The nice form
restricts nodes to leaf/introduce/forget/join with empty root and leaf bags,
and keeps every pair of adjacent distinct bags one variable apart.  All tie
breaking follows variable declaration order, so outputs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ExactTooLarge
from .formula import PrimalGraph


@dataclass
class TreeDecomposition:
    bags: list[tuple[str, ...]]
    edges: list[tuple[int, int]]

    def width(self) -> int:
        return max(len(b) for b in self.bags) - 1

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {i: [] for i in range(len(self.bags))}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {i: sorted(ns) for i, ns in adj.items()}


@dataclass
class NiceNode:
    bag: tuple[str, ...]
    kind: str  # leaf | introduce | forget | join
    children: tuple[int, ...]


@dataclass
class NiceTreeDecomposition:
    nodes: list[NiceNode]
    root: int

    def width(self) -> int:
        return max(len(n.bag) for n in self.nodes) - 1

    def preorder(self) -> list[int]:
        out: list[int] = []
        stack = [self.root]
        while stack:
            i = stack.pop()
            out.append(i)
            stack.extend(reversed(self.nodes[i].children))
        return out

    def parents(self) -> dict[int, int | None]:
        parent: dict[int, int | None] = {self.root: None}
        for i, node in enumerate(self.nodes):
            for c in node.children:
                parent[c] = i
        return parent


# ---------------------------------------------------------------------------
# Elimination orders


def _adjacency(g: PrimalGraph) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {v: set() for v in g.vertices}
    for a, b in g.edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _min_fill_order(g: PrimalGraph) -> list[str]:
    idx = {v: i for i, v in enumerate(g.vertices)}
    live = _adjacency(g)
    order: list[str] = []
    while live:
        best = None
        for v in sorted(live, key=idx.__getitem__):
            nbrs = live[v]
            fill = 0
            ns = sorted(nbrs, key=idx.__getitem__)
            for i in range(len(ns)):
                for j in range(i + 1, len(ns)):
                    if ns[j] not in live[ns[i]]:
                        fill += 1
            if best is None or fill < best[0]:
                best = (fill, v)
        v = best[1]
        nbrs = sorted(live[v], key=idx.__getitem__)
        for a in nbrs:
            live[a].discard(v)
        for i in range(len(nbrs)):
            for j in range(i + 1, len(nbrs)):
                live[nbrs[i]].add(nbrs[j])
                live[nbrs[j]].add(nbrs[i])
        del live[v]
        order.append(v)
    return order


def brute_force_treewidth(g: PrimalGraph) -> int:
    """Exhaustive minimum over all elimination orders.  Test oracle only."""
    import itertools

    best = len(g.vertices)
    for perm in itertools.permutations(g.vertices):
        width = _order_width(g, perm)
        best = min(best, width)
    return best


def _order_width(g: PrimalGraph, order) -> int:
    live = _adjacency(g)
    width = 0
    for v in order:
        width = max(width, len(live[v]))
        nbrs = list(live[v])
        for a in nbrs:
            live[a].discard(v)
        for i in range(len(nbrs)):
            for j in range(i + 1, len(nbrs)):
                live[nbrs[i]].add(nbrs[j])
                live[nbrs[j]].add(nbrs[i])
        del live[v]
    return width


def _exact_order(g: PrimalGraph, limit: int) -> list[str]:
    """Optimal elimination order by dynamic programming over vertex subsets."""
    n = len(g.vertices)
    if n > limit:
        raise ExactTooLarge(
            "exact treewidth limited to %d vertices, graph has %d" % (limit, n)
        )
    nbr = [0] * n
    idx = {v: i for i, v in enumerate(g.vertices)}
    for a, b in g.edges:
        nbr[idx[a]] |= 1 << idx[b]
        nbr[idx[b]] |= 1 << idx[a]

    def q_size(eliminated: int, v: int) -> int:
        # future neighbors of v: vertices outside `eliminated` reachable from
        # v through eliminated vertices only
        seen = 1 << v
        stack = [v]
        count = 0
        while stack:
            u = stack.pop()
            rest = nbr[u] & ~seen
            while rest:
                w = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                seen |= 1 << w
                if eliminated >> w & 1:
                    stack.append(w)
                else:
                    count += 1
        return count

    full = (1 << n) - 1
    f = {0: -1}
    choice: dict[int, int] = {}
    by_count: list[list[int]] = [[] for _ in range(n + 1)]
    for s in range(1, full + 1):
        by_count[bin(s).count("1")].append(s)
    for size in range(1, n + 1):
        for s in by_count[size]:
            best = None
            rest = s
            while rest:
                v = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                w = max(f[s & ~(1 << v)], q_size(s & ~(1 << v), v))
                if best is None or w < best[0]:
                    best = (w, v)
            f[s] = best[0]
            choice[s] = best[1]

    order_rev = []
    s = full
    while s:
        v = choice[s]
        order_rev.append(g.vertices[v])
        s &= ~(1 << v)
    return list(reversed(order_rev))


# ---------------------------------------------------------------------------
# Decomposition from an elimination order


def _decomposition_from_order(g: PrimalGraph, order: list[str]) -> TreeDecomposition:
    idx = {v: i for i, v in enumerate(g.vertices)}
    live = _adjacency(g)
    pos = {v: i for i, v in enumerate(order)}
    bags: list[tuple[str, ...]] = []
    elim_neighbors: list[list[str]] = []
    for v in order:
        nbrs = sorted(live[v], key=idx.__getitem__)
        bags.append(tuple(sorted([v] + nbrs, key=idx.__getitem__)))
        elim_neighbors.append(nbrs)
        for a in nbrs:
            live[a].discard(v)
        for i in range(len(nbrs)):
            for j in range(i + 1, len(nbrs)):
                live[nbrs[i]].add(nbrs[j])
                live[nbrs[j]].add(nbrs[i])
        del live[v]
    edges: list[tuple[int, int]] = []
    roots: list[int] = []
    for i in range(len(order)):
        nbrs = elim_neighbors[i]
        if nbrs:
            edges.append((i, min(pos[u] for u in nbrs)))
        else:
            roots.append(i)
    for a, b in zip(roots, roots[1:]):
        edges.append((a, b))
    return _absorb_subset_bags(TreeDecomposition(bags, edges))


def _absorb_subset_bags(t: TreeDecomposition) -> TreeDecomposition:
    bags = [set(b) for b in t.bags]
    orig = list(t.bags)
    adj: dict[int, set[int]] = {i: set() for i in range(len(bags))}
    for a, b in t.edges:
        adj[a].add(b)
        adj[b].add(a)
    alive = set(adj)
    changed = True
    while changed:
        changed = False
        for i in sorted(alive):
            for j in sorted(adj[i]):
                if bags[i] <= bags[j]:
                    for k in adj[i]:
                        if k != j:
                            adj[k].discard(i)
                            adj[k].add(j)
                            adj[j].add(k)
                    adj[j].discard(i)
                    alive.discard(i)
                    del adj[i]
                    changed = True
                    break
            if changed:
                break
    remap = {i: k for k, i in enumerate(sorted(alive))}
    new_bags = [orig[i] for i in sorted(alive)]
    new_edges = sorted(
        {(min(remap[a], remap[b]), max(remap[a], remap[b])) for a in sorted(alive) for b in adj[a]}
    )
    return TreeDecomposition(new_bags, new_edges)


def compute_decomposition(
    g: PrimalGraph, strategy: str = "greedy-minfill", exact_limit: int = 12
) -> TreeDecomposition:
    """Tree decomposition of a primal graph.

    ``greedy-minfill`` is the default heuristic; ``exact`` guarantees
    optimal width via subset DP and refuses graphs above ``exact_limit``.
    """
    if not g.vertices:
        raise ValueError("cannot decompose an empty graph")
    if strategy == "greedy-minfill":
        order = _min_fill_order(g)
    elif strategy == "exact":
        order = _exact_order(g, exact_limit)
    else:
        raise ValueError("unknown strategy %r" % strategy)
    return _decomposition_from_order(g, order)


# ---------------------------------------------------------------------------
# Nice normalization


def make_nice(t: TreeDecomposition, var_order) -> NiceTreeDecomposition:
    """Normalize to a nice decomposition of the same width.

    Adjacent distinct bags always differ by exactly one variable.  When a
    bag chain shrinks toward the empty bag, later-declared variables are
    dropped first; when it grows, earlier-declared variables are added
    first.
    """
    idx = {v: i for i, v in enumerate(var_order)}
    nodes: list[list] = []  # [bag, children list]

    def add(bag: tuple[str, ...], children: list[int]) -> int:
        nodes.append([bag, children])
        return len(nodes) - 1

    def lift(node_id: int, bag: tuple[str, ...], target: tuple[str, ...]) -> int:
        """Chain of one-variable steps from `bag` up to `target`."""
        current = list(bag)
        cur_id = node_id
        for v in sorted(set(bag) - set(target), key=idx.__getitem__, reverse=True):
            current.remove(v)
            cur_id = add(tuple(sorted(current, key=idx.__getitem__)), [cur_id])
        for v in sorted(set(target) - set(bag), key=idx.__getitem__):
            current.append(v)
            cur_id = add(tuple(sorted(current, key=idx.__getitem__)), [cur_id])
        return cur_id

    adj = t.adjacency()

    def build(raw: int, parent_raw: int | None) -> int:
        bag = t.bags[raw]
        children = [c for c in adj[raw] if c != parent_raw]
        if not children:
            leaf = add((), [])
            return lift(leaf, (), bag)
        tops = []
        for c in children:
            child_top = build(c, raw)
            tops.append(lift(child_top, t.bags[c], bag))
        rep = tops[0]
        for other in tops[1:]:
            rep = add(bag, [rep, other])
        return rep

    top = build(0, None)
    root = lift(top, t.bags[0], ())

    nice_nodes: list[NiceNode] = []
    for bag, children in nodes:
        if not children:
            kind = "leaf"
        elif len(children) == 2:
            kind = "join"
        else:
            child_bag = nodes[children[0]][0]
            kind = "introduce" if len(bag) > len(child_bag) else "forget"
        nice_nodes.append(NiceNode(bag, kind, tuple(children)))
    return NiceTreeDecomposition(nice_nodes, root)


def verify_nice(nt: NiceTreeDecomposition, g: PrimalGraph) -> bool:
    """Check every defining property of a nice tree decomposition of g."""
    nodes = nt.nodes
    if not nodes or not (0 <= nt.root < len(nodes)):
        return False
    # rooted tree structure: each node except the root has exactly one parent
    parent_count = [0] * len(nodes)
    for node in nodes:
        for c in node.children:
            if not 0 <= c < len(nodes):
                return False
            parent_count[c] += 1
    if parent_count[nt.root] != 0:
        return False
    if any(parent_count[i] != 1 for i in range(len(nodes)) if i != nt.root):
        return False
    reached = set(nt.preorder())
    if len(reached) != len(nodes):
        return False
    # node kinds
    if nodes[nt.root].bag:
        return False
    for node in nodes:
        bag = set(node.bag)
        kids = node.children
        if node.kind == "leaf":
            if kids or bag:
                return False
        elif node.kind == "introduce":
            if len(kids) != 1:
                return False
            child = set(nodes[kids[0]].bag)
            if not (child < bag and len(bag - child) == 1):
                return False
        elif node.kind == "forget":
            if len(kids) != 1:
                return False
            child = set(nodes[kids[0]].bag)
            if not (bag < child and len(child - bag) == 1):
                return False
        elif node.kind == "join":
            if len(kids) != 2:
                return False
            if any(set(nodes[c].bag) != bag for c in kids):
                return False
        else:
            return False
    # vertex and edge coverage
    occurrence: dict[str, list[int]] = {v: [] for v in g.vertices}
    for i, node in enumerate(nodes):
        for v in node.bag:
            if v not in occurrence:
                return False
            occurrence[v].append(i)
    if any(not occ for occ in occurrence.values()):
        return False
    for a, b in g.edges:
        if not any(a in n.bag and b in n.bag for n in nodes):
            return False
    # occurrence subtrees are connected
    neighbors: dict[int, list[int]] = {i: list(n.children) for i, n in enumerate(nodes)}
    for i, node in enumerate(nodes):
        for c in node.children:
            neighbors[c].append(i)
    for v, occ in occurrence.items():
        members = set(occ)
        seen = {occ[0]}
        stack = [occ[0]]
        while stack:
            u = stack.pop()
            for w in neighbors[u]:
                if w in members and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != members:
            return False
    return True


# ---------------------------------------------------------------------------
# Interchange formats


def export_td(t: TreeDecomposition, var_order) -> str:
    """PACE-style .td text (1-based vertex ids in declaration order)."""
    idx = {v: i + 1 for i, v in enumerate(var_order)}
    lines = ["s td %d %d %d" % (len(t.bags), max(len(b) for b in t.bags), len(var_order))]
    for i, bag in enumerate(t.bags):
        lines.append("b %d %s" % (i + 1, " ".join(str(idx[v]) for v in bag)))
    for a, b in t.edges:
        lines.append("%d %d" % (a + 1, b + 1))
    return "\n".join(lines) + "\n"


def import_td(text: str, var_order) -> TreeDecomposition:
    names = list(var_order)
    bags: dict[int, tuple[str, ...]] = {}
    edges: list[tuple[int, int]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("s"):
            continue
        parts = line.split()
        if parts[0] == "b":
            bags[int(parts[1]) - 1] = tuple(names[int(x) - 1] for x in parts[2:])
        else:
            edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
    return TreeDecomposition([bags[i] for i in sorted(bags)], edges)


def nice_to_json(nt: NiceTreeDecomposition) -> dict:
    return {
        "root": nt.root,
        "nodes": [
            {"bag": list(n.bag), "kind": n.kind, "children": list(n.children)}
            for n in nt.nodes
        ],
    }


def nice_from_json(obj: dict) -> NiceTreeDecomposition:
    nodes = [
        NiceNode(tuple(n["bag"]), n["kind"], tuple(n["children"]))
        for n in obj["nodes"]
    ]
    return NiceTreeDecomposition(nodes, obj["root"])
