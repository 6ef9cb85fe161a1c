"""Stopping times, reaction families and stopping strategies on a scenario tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .filtration import FilteredTree


class StoppingTime:
    """A first-hit rule: stop at the first node on the path whose flag is set.

    Adaptedness is structural. Validity (leaves flagged, nothing flagged below
    ``floor``) is not enforced at construction so that invalid inputs can be
    reported by :func:`validate_strategy`.
    """

    def __init__(self, tree: FilteredTree, stop, floor: int = 0):
        self.tree = tree
        self.stop = np.asarray(stop, dtype=bool).copy()
        if self.stop.shape != (tree.n_nodes,):
            raise ContractViolation(f"stop flags need {tree.n_nodes} entries, got {self.stop.shape}")
        self.floor = int(floor)
        hits = self.stop[tree.paths]
        # paths that never hit are treated as stopping at the horizon
        self.times = np.where(hits.any(axis=1), hits.argmax(axis=1), tree.N).astype(np.int64)

    @classmethod
    def constant(cls, tree: FilteredTree, k: int) -> "StoppingTime":
        stop = (tree.level == k) | tree.is_leaf
        return cls(tree, stop, floor=k)

    @classmethod
    def from_times(cls, tree: FilteredTree, times, floor: int | None = None) -> "StoppingTime":
        """Build the stopping time realizing per-scenario levels ``times``.

        Raises ContractViolation if ``times`` is not adapted, i.e. if some
        node has scenarios that stop there and scenarios that go on.
        """
        times = np.asarray(times, dtype=np.int64)
        if times.shape != (tree.n_scenarios,):
            raise ContractViolation(f"need one time per scenario, got shape {times.shape}")
        if times.min() < 0 or times.max() > tree.N:
            raise ContractViolation("stopping levels must lie in 0..N")
        stop = tree.is_leaf.copy()
        for k in range(tree.N):
            col = tree.scenario_nodes(k)
            eq = np.bincount(col, weights=times == k, minlength=tree.count(k))
            ge = np.bincount(col, weights=times >= k, minlength=tree.count(k))
            bad = np.flatnonzero((eq > 0) & (eq < ge))
            if len(bad):
                node = int(bad[0] + tree.offsets[k])
                raise ContractViolation(f"not a stopping time: decision at node {node} (level {k}) depends on the future")
            stop[tree.level_slice(k)] = eq > 0
        if floor is None:
            floor = int(times.min())
        return cls(tree, stop, floor)

    def realized_time(self, scenario: int) -> int:
        return int(self.times[scenario])

    def boundary(self) -> np.ndarray:
        """Node ids at which some scenario stops."""
        return np.unique(self.tree.paths[np.arange(self.tree.n_scenarios), self.times])

    def before(self) -> np.ndarray:
        """Mask of nodes strictly before the stopping time (not yet stopped on arrival)."""
        tree = self.tree
        mask = np.zeros(tree.n_nodes, dtype=bool)
        for k in range(tree.N + 1):
            running = self.times > k
            mask[tree.paths[running, k]] = True
        return mask

    def violations(self, name: str = "stopping time") -> list[str]:
        tree = self.tree
        out = []
        missing = np.flatnonzero(tree.is_leaf & ~self.stop)
        if len(missing):
            out.append(f"horizon forcing: {name} does not stop at leaves {missing[:5].tolist()}")
        early = np.flatnonzero(self.stop & (tree.level < self.floor))
        if len(early):
            out.append(f"floor: {name} stops at nodes {early[:5].tolist()} below level {self.floor}")
        return out

    def __eq__(self, other):
        return isinstance(other, StoppingTime) and np.array_equal(self.times, other.times)

    def __repr__(self):
        return f"StoppingTime(floor={self.floor}, times={self.times.tolist()})"


class StrategyFamily:
    """A stopping time per anchor level k < N, each strictly later than k.

    The anchor-N entry is the constant N.
    """

    def __init__(self, tree: FilteredTree, entries: list[StoppingTime]):
        if len(entries) != tree.N:
            raise ContractViolation(f"family needs {tree.N} entries (anchors 0..N-1), got {len(entries)}")
        self.tree = tree
        self.entries = list(entries)
        rows = [e.times for e in entries] + [np.full(tree.n_scenarios, tree.N)]
        self.times = np.vstack(rows)

    @classmethod
    def next_level(cls, tree: FilteredTree) -> "StrategyFamily":
        """entry(k) = k + 1 everywhere."""
        return cls(tree, [StoppingTime.constant(tree, k + 1) for k in range(tree.N)])

    @classmethod
    def from_times(cls, tree: FilteredTree, rows) -> "StrategyFamily":
        return cls(tree, [StoppingTime.from_times(tree, rows[k], floor=k + 1) for k in range(tree.N)])

    def entry(self, k: int) -> StoppingTime:
        if k == self.tree.N:
            return StoppingTime.constant(self.tree, self.tree.N)
        return self.entries[k]

    def violations(self, name: str = "family") -> list[str]:
        out = []
        level = self.tree.level
        for k, e in enumerate(self.entries):
            if e.tree is not self.tree:
                out.append(f"tree: {name} entry({k}) lives on another tree")
                continue
            early = np.flatnonzero(e.stop & (level <= k))
            if len(early):
                out.append(
                    f"strict anticipativity: {name} entry({k}) stops at nodes "
                    f"{early[:5].tolist()} at level <= {k}"
                )
            out.extend(e.violations(f"{name} entry({k})"))
        return out


@dataclass
class StoppingStrategy:
    """rho = (rho_0, rho_1): a first stopping time and a reaction family."""

    first: StoppingTime
    reaction: StrategyFamily

    @property
    def tree(self) -> FilteredTree:
        return self.first.tree


def realized_time(sigma: StoppingTime, scenario: int) -> int:
    return sigma.realized_time(scenario)


def react_at(phi: StrategyFamily, sigma) -> np.ndarray:
    """phi(sigma) per scenario: realized time of entry(sigma(w)) on w."""
    times = np.asarray(getattr(sigma, "times", sigma), dtype=np.int64)
    return phi.times[times, np.arange(phi.tree.n_scenarios)]


def compose(rho: StoppingStrategy, tau: StoppingStrategy) -> np.ndarray:
    """rho[tau] per scenario: rho_0 where rho_0 <= tau_0, else rho_1(tau_0)."""
    r0, t0 = rho.first.times, tau.first.times
    return np.where(r0 <= t0, r0, react_at(rho.reaction, t0))


def validate_strategy(rho: StoppingStrategy, name: str = "strategy") -> list[str]:
    out = []
    if rho.reaction.tree is not rho.first.tree:
        out.append(f"tree: {name} components live on different trees")
    out.extend(rho.first.violations(f"{name} first"))
    out.extend(rho.reaction.violations(f"{name} reaction"))
    return out


def first_entry(tree: FilteredTree, region, start) -> np.ndarray:
    """Per scenario, the first level >= start[w] whose node lies in ``region``.

    Leaves count as members of every region (horizon forcing).
    """
    region = np.asarray(region, dtype=bool) | tree.is_leaf
    start = np.broadcast_to(np.asarray(start, dtype=np.int64), (tree.n_scenarios,))
    hits = region[tree.paths] & (np.arange(tree.N + 1)[None, :] >= start[:, None])
    return hits.argmax(axis=1).astype(np.int64)


def count_stopping_times(tree: FilteredTree, floor: int = 0, root: int = 0) -> int:
    """Number of distinct stopping times >= floor on the subtree below ``root``."""
    counts = {}
    for n in range(tree.n_nodes - 1, root - 1, -1):
        if tree.is_leaf[n]:
            counts[n] = 1
        else:
            prod = 1
            for c in tree.children[n]:
                prod *= counts[c]
            counts[n] = prod + (1 if tree.level[n] >= floor else 0)
    return counts[root]


def enumerate_stopping_times(tree: FilteredTree, floor: int = 0, root: int = 0,
                             cap: int = 10**6) -> np.ndarray:
    """All stopping times >= floor on the subtree below ``root``.

    Returns an array of shape (count, scenarios below root) of realized levels.
    """
    total = count_stopping_times(tree, floor, root)
    if total > cap:
        raise ContractViolation(f"{total} stopping times exceed the enumeration cap {cap}")

    def rec(n: int) -> np.ndarray:
        width = tree.scen_hi[n] - tree.scen_lo[n]
        if tree.is_leaf[n]:
            return np.array([[tree.N]], dtype=np.int64)
        parts = [rec(c) for c in tree.children[n]]
        rows = []
        if tree.level[n] >= floor:
            rows.append(np.full((1, width), tree.level[n], dtype=np.int64))
        combo = parts[0]
        for p in parts[1:]:
            combo = np.hstack([np.repeat(combo, len(p), axis=0), np.tile(p, (len(combo), 1))])
        rows.append(combo)
        return np.vstack(rows)

    return rec(root)
