"""Event-sourced continuous-time bipartite user-product graph.

The graph is append-only: each review adds an edge (and any unseen
endpoint nodes). Snapshots are answered by time-bounded queries over the
event log rather than materialized copies. Single writer, any number of
concurrent readers; queries never mutate.
"""

from __future__ import annotations

import csv
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .errors import OutOfOrderEvent, UnknownNode
from .reviews import ReviewEvent, ReviewStream


class Connectivity(Enum):
    FIRST = "first"
    OVERALL = "overall"
    SECOND_ORDER = "second_order"


class DynamicGraph:
    def __init__(self):
        self.users: set[str] = set()
        self.products: set[str] = set()
        self.event_log: list[ReviewEvent] = []
        self.weights: dict[tuple[str, str], int] = {}
        # adjacency holds (timestamp, other-node) in event order
        self._adj: dict[str, list[tuple[int, str]]] = {}

    @classmethod
    def from_stream(cls, stream: ReviewStream | Iterable[ReviewEvent]) -> "DynamicGraph":
        graph = cls()
        for event in stream:
            graph.apply_event(event)
        return graph

    def apply_event(self, event: ReviewEvent) -> "DynamicGraph":
        """Append one edge update; creates unseen endpoint nodes.

        Events must arrive in nondecreasing timestamp order.
        """
        if self.event_log and event.timestamp < self.event_log[-1].timestamp:
            raise OutOfOrderEvent(event.timestamp, self.event_log[-1].timestamp)
        self.users.add(event.user_id)
        self.products.add(event.product_id)
        self.event_log.append(event)
        key = (event.user_id, event.product_id)
        self.weights[key] = self.weights.get(key, 0) + 1
        self._adj.setdefault(event.user_id, []).append(
            (event.timestamp, event.product_id)
        )
        self._adj.setdefault(event.product_id, []).append(
            (event.timestamp, event.user_id)
        )
        return self

    def _require_node(self, node: str) -> None:
        if node not in self.users and node not in self.products:
            raise UnknownNode(node)

    def neighbors(self, node: str, until: Optional[int] = None) -> set[str]:
        """Distinct adjacent nodes via edges with t <= until (default all)."""
        self._require_node(node)
        pairs = self._adj.get(node, [])
        if until is None:
            return {other for _, other in pairs}
        return {other for t, other in pairs if t <= until}

    def second_order_neighbors(self, user: str, until: Optional[int] = None) -> set[str]:
        """Users sharing at least one product with ``user``, excluding it."""
        self._require_node(user)
        out: set[str] = set()
        for product in self.neighbors(user, until):
            out.update(self.neighbors(product, until))
        out.discard(user)
        return out

    def connectivity(self, user: str, order: Connectivity) -> int:
        self._require_node(user)
        if order is Connectivity.SECOND_ORDER:
            return len(self.second_order_neighbors(user))
        # FIRST and OVERALL coincide on a bipartite graph: every neighbor
        # of a user is a product, so both sum the same edge weights.
        return sum(
            self.weights[(user, product)] for product in self.neighbors(user)
        )

    def write_edge_list(self, path: str | Path) -> None:
        """Dump the event log as CSV for external visualization."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", "product_id", "timestamp", "rating"])
            for e in self.event_log:
                writer.writerow([e.user_id, e.product_id, e.timestamp, e.rating])
