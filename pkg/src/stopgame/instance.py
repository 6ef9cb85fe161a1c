"""The "stopgame/v1" JSON format and the random instance generator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation, InstanceError
from .filtration import FilteredTree, GridSpec
from .payoff import PayoffField
from .stopping import StoppingStrategy, StoppingTime, StrategyFamily

SCHEMA = "stopgame/v1"


@dataclass
class Instance:
    tree: FilteredTree
    payoff: PayoffField
    metadata: dict = field(default_factory=dict)


def instance_to_dict(inst: Instance) -> dict:
    tree, U = inst.tree, inst.payoff
    return {
        "schema": SCHEMA,
        "kind": "instance",
        "grid": {"h": tree.grid.h, "N": tree.N},
        "tree": {"parents": tree.parent.tolist(), "probs": tree.edge_prob.tolist()},
        "payoffs": {
            str(i): [[U.tables[i - 1][j][k].tolist() for k in range(tree.N + 1)] for j in range(tree.N + 1)]
            for i in (1, 2)
        },
        "metadata": inst.metadata,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def save(inst: Instance, path) -> None:
    Path(path).write_text(dumps(instance_to_dict(inst)))


def _parse(text: str, where: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{where}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InstanceError(f"{where}: top level must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise InstanceError(f"{where}: field 'schema' must be {SCHEMA!r}, got {doc.get('schema')!r}")
    return doc


def _field(doc: dict, dotted: str):
    cur = doc
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise InstanceError(f"missing field '{dotted}'")
        cur = cur[part]
    return cur


def instance_from_dict(doc: dict) -> Instance:
    try:
        grid = GridSpec(float(_field(doc, "grid.h")), int(_field(doc, "grid.N")))
        tree = FilteredTree(_field(doc, "tree.parents"), _field(doc, "tree.probs"), grid)
    except (ContractViolation, TypeError, ValueError) as exc:
        raise InstanceError(f"tree: {exc}") from exc
    payoffs = _field(doc, "payoffs")
    tables = []
    for i in ("1", "2"):
        rows = payoffs.get(i) if isinstance(payoffs, dict) else None
        if not isinstance(rows, list) or len(rows) != grid.N + 1:
            raise InstanceError(f"payoffs.{i}: expected {grid.N + 1} rows")
        for j, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != grid.N + 1:
                raise InstanceError(f"payoffs.{i}[{j}]: expected {grid.N + 1} entries")
            for k, vals in enumerate(row):
                want = tree.count(max(j, k))
                if not isinstance(vals, list) or len(vals) != want:
                    raise InstanceError(f"payoffs.{i}[{j}][{k}]: expected {want} values on level {max(j, k)}")
        tables.append(rows)
    try:
        U = PayoffField(tree, tables)
    except (ContractViolation, TypeError, ValueError) as exc:
        raise InstanceError(f"payoffs: {exc}") from exc
    return Instance(tree, U, doc.get("metadata", {}))


def load(path) -> Instance:
    return instance_from_dict(_parse(Path(path).read_text(), str(path)))


def loads(text: str) -> Instance:
    return instance_from_dict(_parse(text, "<string>"))


def strategy_to_dict(rho: StoppingStrategy) -> dict:
    return {
        "first": rho.first.stop.astype(int).tolist(),
        "reaction": [e.stop.astype(int).tolist() for e in rho.reaction.entries],
    }


def strategy_from_dict(tree: FilteredTree, doc, name: str) -> StoppingStrategy:
    try:
        first = StoppingTime(tree, doc["first"], 0)
        rows = doc["reaction"]
        if len(rows) != tree.N:
            raise InstanceError(f"{name}.reaction: expected {tree.N} anchors, got {len(rows)}")
        entries = [StoppingTime(tree, rows[k], k + 1) for k in range(tree.N)]
    except (KeyError, TypeError, ContractViolation) as exc:
        raise InstanceError(f"{name}: {exc}") from exc
    return StoppingStrategy(first, StrategyFamily(tree, entries))


def load_strategies(tree: FilteredTree, path) -> tuple[StoppingStrategy, StoppingStrategy]:
    doc = _parse(Path(path).read_text(), str(path))
    strat = doc.get("strategies")
    if not isinstance(strat, dict):
        raise InstanceError(f"{path}: missing field 'strategies'")
    return strategy_from_dict(tree, strat.get("rho"), "strategies.rho"), \
        strategy_from_dict(tree, strat.get("tau"), "strategies.tau")


def generate(seed: int, N: int, h: float, branching: int, lipschitz: float, scale: float,
             zero_sum: bool = False, ragged: bool = False, attrition: float = 0.0) -> Instance:
    """Random tree and payoffs with |U(j,k) - U(j',k')| <= L (|j-j'| + |k-k'|) h.

    Each player's payoff is an offset plus L h times a blend of a bounded-step
    random walk on the tree and two bounded-step walks in j and in k; the blend
    weights keep the combined step at most one. Values are clamped to [-M, M].

    ``attrition`` in [0, 1] tilts the time walks: each player's payoff drifts
    up in their own stopping time and down in the opponent's, so waiting the
    other out pays. Steps stay in [-1, 1] and the blend weights still sum to at
    most one.
    """
    if N < 1 or h <= 0 or branching < 1 or lipschitz < 0 or scale <= 0:
        raise ContractViolation("generator parameters must be positive (lipschitz may be 0)")
    if not 0.0 <= attrition <= 1.0:
        raise ContractViolation(f"attrition must lie in [0, 1], got {attrition}")
    a = float(attrition)
    rng = np.random.default_rng(seed)
    grid = GridSpec(float(h), int(N))
    parents, probs = [-1], [1.0]
    frontier = [0]
    for _ in range(N):
        nxt = []
        for p in frontier:
            c = int(rng.integers(1, branching + 1)) if ragged else branching
            q = rng.dirichlet(np.ones(c)) if c > 1 else np.ones(1)
            q = q / q.sum()
            for x in q:
                nxt.append(len(parents))
                parents.append(p)
                probs.append(float(x))
        frontier = nxt
    tree = FilteredTree(parents, probs, grid)

    fields = []
    for p in (0, 1):
        walk = np.zeros(tree.n_nodes)
        steps = rng.uniform(-1, 1, tree.n_nodes)
        for n in range(1, tree.n_nodes):
            walk[n] = walk[tree.parent[n]] + steps[n]
        # player 1 owns the j axis, player 2 the k axis
        own, other = (a, -a) if p == 0 else (-a, a)
        phi = np.concatenate([[0.0], np.cumsum(own + (1 - a) * rng.uniform(-1, 1, N))])
        psi = np.concatenate([[0.0], np.cumsum(other + (1 - a) * rng.uniform(-1, 1, N))])
        # attrition also shifts weight from the tree walk to the time walks
        w0 = rng.uniform() * (1 - a / 2)
        w1, w2 = (1 - w0) * rng.uniform(size=2)
        offset = rng.uniform(-scale / 2, scale / 2)
        fields.append((walk, phi, psi, w0, w1, w2, offset))

    def value(p: int, j: int, k: int, n: int) -> float:
        walk, phi, psi, w0, w1, w2, offset = fields[p]
        u = offset + lipschitz * h * (w0 * walk[n] + w1 * phi[j] + w2 * psi[k])
        return float(np.clip(u, -scale, scale))

    def f(i, j, k, n):
        if zero_sum and i == 2:
            return -value(0, j, k, n)
        return value(i - 1, j, k, n)

    U = PayoffField.from_function(tree, f)
    meta = {"seed": seed, "branching": branching, "lipschitz": lipschitz, "scale": scale,
            "zero_sum": zero_sum, "ragged": ragged, "attrition": a}
    return Instance(tree, U, meta)
