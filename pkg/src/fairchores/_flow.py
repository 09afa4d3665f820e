"""Exact max-flow on tiny networks with rational capacities.

Plain BFS augmentation (Edmonds-Karp). The networks built here have at most a
few dozen nodes, so asymptotics are irrelevant; what matters is that capacities
and flows stay exact Fractions and that the result is deterministic.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction

INF = Fraction(10**30)


class FlowNetwork:
    def __init__(self):
        self.adj: dict[object, list[int]] = {}
        self.edges: list[list] = []  # [u, v, capacity, flow]

    def add_node(self, node) -> None:
        self.adj.setdefault(node, [])

    def add_edge(self, u, v, capacity: Fraction) -> int:
        """Add a directed edge and its reverse; returns the edge index."""
        self.add_node(u)
        self.add_node(v)
        index = len(self.edges)
        self.edges.append([u, v, capacity, Fraction(0)])
        self.edges.append([v, u, Fraction(0), Fraction(0)])
        self.adj[u].append(index)
        self.adj[v].append(index + 1)
        return index

    def residual(self, index: int) -> Fraction:
        edge = self.edges[index]
        return edge[2] - edge[3]

    def flow_value(self, index: int) -> Fraction:
        return self.edges[index][3]

    def _augment(self, source, sink) -> Fraction:
        parent: dict[object, int] = {source: -1}
        queue = deque([source])
        while queue:
            node = queue.popleft()
            if node == sink:
                break
            for index in self.adj[node]:
                edge = self.edges[index]
                if edge[1] not in parent and edge[2] > edge[3]:
                    parent[edge[1]] = index
                    queue.append(edge[1])
        if sink not in parent:
            return Fraction(0)
        bottleneck = INF
        node = sink
        while node != source:
            index = parent[node]
            bottleneck = min(bottleneck, self.residual(index))
            node = self.edges[index][0]
        node = sink
        while node != source:
            index = parent[node]
            self.edges[index][3] += bottleneck
            self.edges[index ^ 1][3] -= bottleneck
            node = self.edges[index][0]
        return bottleneck

    def max_flow(self, source, sink) -> Fraction:
        total = Fraction(0)
        while True:
            pushed = self._augment(source, sink)
            if pushed == 0:
                return total
            total += pushed

    def reachable(self, source) -> set:
        """Nodes reachable from ``source`` in the residual graph."""
        seen = {source}
        queue = deque([source])
        while queue:
            node = queue.popleft()
            for index in self.adj[node]:
                edge = self.edges[index]
                if edge[1] not in seen and edge[2] > edge[3]:
                    seen.add(edge[1])
                    queue.append(edge[1])
        return seen
