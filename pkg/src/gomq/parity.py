"""Parity games on explicit arenas, solved by recursive attractor decomposition.

Convention: the maximum priority seen infinitely often decides; even means Eve
(player 0) wins.  Arenas must be total (every position has a successor).
"""
from __future__ import annotations

from collections import deque

EVE, ADAM = 0, 1


class Arena:
    def __init__(self):
        self.owner = []
        self.priority = []
        self.succ = []
        self.index = {}
        self.keys = []

    def add(self, key, owner: int, priority: int) -> int:
        i = self.index.get(key)
        if i is not None:
            return i
        i = len(self.owner)
        self.index[key] = i
        self.keys.append(key)
        self.owner.append(owner)
        self.priority.append(priority)
        self.succ.append([])
        return i

    def __len__(self):
        return len(self.owner)

    def edge(self, a: int, b: int):
        self.succ[a].append(b)

    def sinks(self) -> tuple:
        """A position won by Eve and one won by Adam, both self-looping."""
        win = self.add(("__win__",), EVE, 0)
        lose = self.add(("__lose__",), EVE, 1)
        if not self.succ[win]:
            self.edge(win, win)
            self.edge(lose, lose)
        return win, lose

    def close_dead_ends(self):
        """A player without moves loses: route dead ends into the matching sink."""
        win, lose = self.sinks()
        for v in range(len(self)):
            if not self.succ[v]:
                self.edge(v, lose if self.owner[v] == EVE else win)


def _attractor(nodes: set, target: set, player: int, arena: Arena, pred) -> set:
    attr = set(target)
    count = {}
    queue = deque(target)
    while queue:
        x = queue.popleft()
        for y in pred[x]:
            if y not in nodes or y in attr:
                continue
            if arena.owner[y] == player:
                attr.add(y)
                queue.append(y)
            else:
                if y not in count:
                    count[y] = sum(1 for z in arena.succ[y] if z in nodes)
                count[y] -= 1
                if count[y] == 0:
                    attr.add(y)
                    queue.append(y)
    return attr


def _zielonka(nodes: frozenset, arena: Arena, pred) -> tuple:
    if not nodes:
        return set(), set()
    top = max(arena.priority[v] for v in nodes)
    player = top % 2
    heads = {v for v in nodes if arena.priority[v] == top}
    a = _attractor(nodes, heads, player, arena, pred)
    sub = _zielonka(frozenset(nodes - a), arena, pred)
    opponent_region = sub[1 - player]
    if not opponent_region:
        won = (set(nodes), set())
        return won if player == EVE else won[::-1]
    b = _attractor(nodes, opponent_region, 1 - player, arena, pred)
    rest = _zielonka(frozenset(nodes - b), arena, pred)
    out = [set(rest[0]), set(rest[1])]
    out[1 - player] |= b
    return out[0], out[1]


def solve(arena: Arena, nodes=None) -> tuple:
    """Winning regions (Eve, Adam) of the subgame on `nodes` (default: all)."""
    pred = [[] for _ in range(len(arena))]
    for v, targets in enumerate(arena.succ):
        for w in targets:
            pred[w].append(v)
    nodes = frozenset(range(len(arena)) if nodes is None else nodes)
    return _zielonka(nodes, arena, pred)


def reachable(arena: Arena, start: int) -> set:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in arena.succ[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def eve_wins(arena: Arena, start: int) -> bool:
    region = reachable(arena, start)
    eve, _ = solve(arena, region)
    return start in eve
