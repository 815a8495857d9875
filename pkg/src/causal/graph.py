# Copyright 2026 The mbias-twoplate Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Directed acyclic graphs, graph surgery and d-separation.

Graphs are immutable values keyed by string labels. Surgery (the do-operator's
mutilation, and the removal of outgoing edges used by the second do-calculus rule)
returns new graphs. d-separation is decided with the reachability ("Bayes-ball")
formulation; ``open_paths`` enumerates active trails explicitly and is used to
explain verdicts and to cross-check the reachability answer.
"""

import logging
from collections import deque
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from lib.constants import M_GRAPH_EDGES, VARIABLES
from lib.errors import GraphInputError

logger = logging.getLogger(__name__)

Edge = Tuple[str, str]

# Directions a trail can enter a node with.
_FROM_CHILD = "up"
_FROM_PARENT = "down"


class Dag:
    """A directed acyclic graph over named nodes.

    Nodes keep their declaration order, edges are a set of (parent, child) pairs.
    Construction rejects unknown endpoints and directed cycles.
    """

    __slots__ = ("_nodes", "_edges", "_parents", "_children")

    def __init__(self, nodes: Iterable[str], edges: Iterable[Edge] = ()):
        ordered: List[str] = []
        for node in nodes:
            if not isinstance(node, str) or not node:
                raise GraphInputError(f"Node labels must be non-empty strings, got {node!r}.")
            if node not in ordered:
                ordered.append(node)
        edge_set = frozenset((str(parent), str(child)) for parent, child in edges)
        for parent, child in sorted(edge_set):
            if parent not in ordered or child not in ordered:
                raise GraphInputError(f"Edge {parent} -> {child} names a node not in the graph.")
            if parent == child:
                raise GraphInputError(f"Self loop on node {parent}.")

        digraph = nx.DiGraph()
        digraph.add_nodes_from(ordered)
        digraph.add_edges_from(edge_set)
        if not nx.is_directed_acyclic_graph(digraph):
            cycle = nx.find_cycle(digraph)
            raise GraphInputError(
                "Graph has a directed cycle: " + " -> ".join(p for p, _ in cycle) + f" -> {cycle[0][0]}"
            )

        self._nodes: Tuple[str, ...] = tuple(ordered)
        self._edges: FrozenSet[Edge] = edge_set
        self._parents: Dict[str, FrozenSet[str]] = {
            node: frozenset(p for p, c in edge_set if c == node) for node in ordered
        }
        self._children: Dict[str, FrozenSet[str]] = {
            node: frozenset(c for p, c in edge_set if p == node) for node in ordered
        }

    @property
    def nodes(self) -> Tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> FrozenSet[Edge]:
        return self._edges

    def parents(self, node: str) -> FrozenSet[str]:
        return self._parents[node]

    def children(self, node: str) -> FrozenSet[str]:
        return self._children[node]

    def to_networkx(self) -> nx.DiGraph:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(self._nodes)
        digraph.add_edges_from(self._edges)
        return digraph

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return set(self._nodes) == set(other._nodes) and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((frozenset(self._nodes), self._edges))

    def __repr__(self) -> str:
        edges = ", ".join(f"{p}->{c}" for p, c in sorted(self._edges))
        return f"Dag(nodes={list(self._nodes)}, edges=[{edges}])"


def m_graph() -> Dag:
    """The M-structure U -> T, U -> Z <- W, W -> Y, T -> Y."""
    return Dag(VARIABLES, M_GRAPH_EDGES)


def _check_members(g: Dag, nodes: Iterable[str], what: str) -> FrozenSet[str]:
    node_set = frozenset(nodes)
    unknown = sorted(node_set - set(g.nodes))
    if unknown:
        raise GraphInputError(f"Unknown node(s) in {what}: {', '.join(unknown)}.")
    return node_set


def mutilate(g: Dag, targets: Iterable[str]) -> Dag:
    """Remove every edge pointing into a target node (the do-operator's surgery).

    Args:
        g (Dag): The graph. It is not modified.
        targets (Iterable[str]): Intervened nodes.

    Returns:
        Dag: A copy of ``g`` without the incoming edges of ``targets``.

    Raises:
        GraphInputError: If a target is not a node of ``g``.
    """
    target_set = _check_members(g, targets, "intervention targets")
    return Dag(g.nodes, (edge for edge in g.edges if edge[1] not in target_set))


def remove_outgoing(g: Dag, sources: Iterable[str]) -> Dag:
    """Remove every edge leaving a source node."""
    source_set = _check_members(g, sources, "edge-removal sources")
    return Dag(g.nodes, (edge for edge in g.edges if edge[0] not in source_set))


def ancestors(g: Dag, nodes: Iterable[str]) -> FrozenSet[str]:
    """Ancestors of ``nodes``, the nodes themselves included."""
    node_set = _check_members(g, nodes, "ancestor query")
    digraph = g.to_networkx()
    result: Set[str] = set(node_set)
    for node in node_set:
        result |= nx.ancestors(digraph, node)
    return frozenset(result)


def topological_order(g: Dag) -> List[str]:
    """Nodes in topological order, ties broken by declaration order."""
    position = {node: i for i, node in enumerate(g.nodes)}
    return list(nx.lexicographical_topological_sort(g.to_networkx(), key=position.get))


def _check_query(g: Dag, x: Iterable[str], y: Iterable[str], z: Iterable[str]):
    x_set = _check_members(g, x, "X")
    y_set = _check_members(g, y, "Y")
    z_set = _check_members(g, z, "Z")
    if not x_set or not y_set:
        raise GraphInputError("X and Y must both be non-empty.")
    for (name_a, set_a), (name_b, set_b) in (
        (("X", x_set), ("Y", y_set)),
        (("X", x_set), ("Z", z_set)),
        (("Y", y_set), ("Z", z_set)),
    ):
        overlap = sorted(set_a & set_b)
        if overlap:
            raise GraphInputError(f"Node sets {name_a} and {name_b} overlap on {', '.join(overlap)}.")
    return x_set, y_set, z_set


def reachable(g: Dag, sources: FrozenSet[str], given: FrozenSet[str]) -> FrozenSet[str]:
    """Nodes connected to ``sources`` by an active trail given ``given``.

    A trail entering a non-conditioned node from a child may continue to any parent
    or child. Entering from a parent, it continues to children unless the node is
    conditioned on, and turns back up to the parents only when the node is a
    conditioned collider or has a conditioned descendant.
    """
    opens_collider = ancestors(g, given) if given else frozenset()
    schedule = deque((node, _FROM_CHILD) for node in sorted(sources))
    visited: Set[Tuple[str, str]] = set()
    found: Set[str] = set()
    while schedule:
        node, direction = schedule.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in given:
            found.add(node)

        if direction == _FROM_CHILD and node not in given:
            schedule.extend((parent, _FROM_CHILD) for parent in g.parents(node))
            schedule.extend((child, _FROM_PARENT) for child in g.children(node))
        elif direction == _FROM_PARENT:
            if node not in given:
                schedule.extend((child, _FROM_PARENT) for child in g.children(node))
            if node in opens_collider:
                schedule.extend((parent, _FROM_CHILD) for parent in g.parents(node))
    return frozenset(found - sources)


def d_separated(g: Dag, x: Iterable[str], y: Iterable[str], z: Iterable[str] = ()) -> bool:
    """Decide whether X and Y are d-separated given Z.

    Args:
        g (Dag): The graph.
        x (Iterable[str]): First node set, non-empty.
        y (Iterable[str]): Second node set, non-empty.
        z (Iterable[str]): Conditioning set.

    Returns:
        bool: True iff every trail between X and Y is blocked by Z.

    Raises:
        GraphInputError: If a set is empty (X, Y), names unknown nodes or the sets overlap.
    """
    x_set, y_set, z_set = _check_query(g, x, y, z)
    return not reachable(g, x_set, z_set) & y_set


def _trail_is_active(g: Dag, trail: List[str], given: FrozenSet[str], opens_collider: FrozenSet[str]) -> bool:
    for before, middle, after in zip(trail, trail[1:], trail[2:]):
        is_collider = before in g.parents(middle) and after in g.parents(middle)
        if is_collider:
            if middle not in opens_collider:
                return False
        elif middle in given:
            return False
    return True


def open_paths(g: Dag, x: Iterable[str], y: Iterable[str], z: Iterable[str] = ()) -> List[List[str]]:
    """Enumerate the active trails between X and Y given Z.

    Exhaustive over simple trails of the skeleton, so only suited to small graphs.
    ``d_separated(g, x, y, z)`` holds exactly when this returns an empty list.
    """
    x_set, y_set, z_set = _check_query(g, x, y, z)
    opens_collider = ancestors(g, z_set) if z_set else frozenset()
    skeleton = g.to_networkx().to_undirected()
    trails: List[List[str]] = []
    for source in sorted(x_set):
        for target in sorted(y_set):
            for trail in nx.all_simple_paths(skeleton, source, target):
                # Trails through another X or Y node are covered by a shorter trail.
                if any(node in x_set or node in y_set for node in trail[1:-1]):
                    continue
                if _trail_is_active(g, trail, z_set, opens_collider):
                    trails.append(trail)
    return sorted(trails, key=lambda trail: (len(trail), trail))


def format_trail(g: Dag, trail: List[str]) -> str:
    """Render a trail with edge directions, e.g. ``T <- U -> Z``."""
    parts = [trail[0]]
    for a, b in zip(trail, trail[1:]):
        parts.append("->" if (a, b) in g.edges else "<-")
        parts.append(b)
    return " ".join(parts)


def rule_condition_holds(
    g: Dag,
    rule: int,
    y: Iterable[str],
    x: Iterable[str] = (),
    z: Iterable[str] = (),
    w: Iterable[str] = (),
) -> bool:
    """Evaluate the graphical condition of a do-calculus rule.

    Rule 1 (insert/delete observations): Y _||_ Z | X, W in g with edges into X removed.
    Rule 2 (action/observation exchange): Y _||_ Z | X, W in g with edges into X and
    edges out of Z removed.
    Rule 3 (insert/delete actions): Y _||_ Z | X, W in g with edges into X and edges
    into Z(W) removed, where Z(W) are the Z-nodes that are not ancestors of any
    W-node in the X-mutilated graph.

    Args:
        g (Dag): The pre-intervention graph.
        rule (int): 1, 2 or 3.
        y, x, z, w (Iterable[str]): Pairwise disjoint node sets.

    Returns:
        bool: Whether the rule's independence condition holds. An empty Y or Z makes
        the claim vacuous and returns True.

    Raises:
        GraphInputError: For an unknown rule index, unknown nodes or overlapping sets.
    """
    if rule not in (1, 2, 3):
        raise GraphInputError(f"Unknown do-calculus rule {rule!r}; expected 1, 2 or 3.")
    sets = {
        "Y": _check_members(g, y, "Y"),
        "X": _check_members(g, x, "X"),
        "Z": _check_members(g, z, "Z"),
        "W": _check_members(g, w, "W"),
    }
    names = list(sets)
    for i, first in enumerate(names):
        for second in names[i + 1 :]:
            overlap = sorted(sets[first] & sets[second])
            if overlap:
                raise GraphInputError(f"Node sets {first} and {second} overlap on {', '.join(overlap)}.")
    y_set, x_set, z_set, w_set = sets["Y"], sets["X"], sets["Z"], sets["W"]
    if not y_set or not z_set:
        return True

    surgered = mutilate(g, x_set)
    if rule == 2:
        surgered = remove_outgoing(surgered, z_set)
    elif rule == 3:
        w_ancestors = ancestors(surgered, w_set) if w_set else frozenset()
        z_of_w = z_set - w_ancestors
        surgered = mutilate(surgered, z_of_w)

    verdict = d_separated(surgered, y_set, z_set, x_set | w_set)
    logger.debug(f"Rule {rule}: Y={sorted(y_set)} Z={sorted(z_set)} X={sorted(x_set)} W={sorted(w_set)} -> {verdict}")
    return verdict


def parse_edge_list(text: str) -> Dag:
    """Parse a plain-text edge list.

    One ``parent child`` pair per line; a line with a single label declares an
    isolated node. Blank lines and ``#`` comments are ignored.

    Raises:
        GraphInputError: For lines with more than two labels, or an invalid graph.
    """
    nodes: List[str] = []
    edges: List[Edge] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        labels = line.split()
        if len(labels) > 2:
            raise GraphInputError(f"Line {line_number}: expected 'parent child', got {raw.strip()!r}.")
        for label in labels:
            if label not in nodes:
                nodes.append(label)
        if len(labels) == 2:
            edges.append((labels[0], labels[1]))
    return Dag(nodes, edges)


def format_edge_list(g: Dag, header: Optional[str] = None) -> str:
    """Render ``g`` as an edge list that ``parse_edge_list`` reads back."""
    lines = [f"# {header}"] if header else []
    order = {node: i for i, node in enumerate(g.nodes)}
    connected = {node for edge in g.edges for node in edge}
    lines.extend(node for node in g.nodes if node not in connected)
    lines.extend(
        f"{p} {c}" for p, c in sorted(g.edges, key=lambda edge: (order[edge[0]], order[edge[1]]))
    )
    return "\n".join(lines) + "\n"
