"""Monte Carlo Tree Search over DiffForest states.

States are DiffForests; transformation rules are the transitions. UCT
selection balances exploitation of low-cost states (reward 1/(1+cost),
keeping rewards in (0,1]) with exploration. A state's rollout value is the
minimum cost over K randomly sampled interface mappings. The incumbent
best state is tracked globally across all rollouts; the final answer is
the lower of the complete-searched incumbent and the complete-searched
initial state, so the result is never worse than the static fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Optional

from .cost import CostBreakdown, CostParams, interface_cost, state_value
from .difftree import DiffForest, canonical_key, initial_forest
from .errors import BudgetExceededError
from .mapping import InterfaceSpec, best_mapping
from .relation import TableCatalog
from .sqlast import Query
from .transforms import TransformAction, applicable_actions, apply_action


@dataclass
class SearchConfig:
    iterations: int = 200
    rollouts: int = 10  # K samples per state evaluation
    exploration: float = 1.414
    max_depth: int = 6
    seed: int = 0
    complete_top: int = 1  # complete-search the N best states by rollout value

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "rollouts": self.rollouts,
            "exploration": self.exploration,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "complete_top": self.complete_top,
        }


@dataclass
class SearchNode:
    state: DiffForest
    depth: int
    untried: list[TransformAction]
    visits: int = 0
    value_sum: float = 0.0
    best_value: float = math.inf
    children: list[tuple[TransformAction, str]] = field(default_factory=list)

    @property
    def mean_value(self) -> float:
        return self.value_sum / self.visits if self.visits else math.inf


@dataclass
class SearchResult:
    state: DiffForest
    spec: InterfaceSpec
    breakdown: CostBreakdown
    config: SearchConfig
    trace: list[dict] = field(default_factory=list)


def search(
    queries: list[Query],
    catalog: TableCatalog,
    screen: tuple[int, int],
    config: Optional[SearchConfig] = None,
    params: Optional[CostParams] = None,
    collect_trace: bool = False,
) -> SearchResult:
    """Find a low-cost interface expressing every query in the log."""
    config = config or SearchConfig()
    params = params or CostParams(screen=screen)
    root_state = initial_forest(queries, catalog)
    rng = Random(config.seed)

    nodes: dict[str, SearchNode] = {}
    trace: list[dict] = []

    def get_node(state: DiffForest, depth: int) -> SearchNode:
        key = canonical_key(state)
        node = nodes.get(key)
        if node is None:
            node = SearchNode(state, depth, list(applicable_actions(state)))
            nodes[key] = node
        return node

    def rollout(state: DiffForest) -> float:
        return state_value(
            state, queries, catalog, screen, config.rollouts, rng.randrange(2**32), params
        )

    root = get_node(root_state, 0)
    # rollout value per distinct state, in first-evaluation order
    evaluated: dict[str, tuple[float, int, DiffForest]] = {}

    def record(state: DiffForest, value: float) -> None:
        key = canonical_key(state)
        known = evaluated.get(key)
        if known is None:
            evaluated[key] = (value, len(evaluated), state)
        elif value < known[0]:
            evaluated[key] = (value, known[1], state)

    root_value = rollout(root_state)
    record(root_state, root_value)
    root.visits = 1
    root.value_sum = root_value
    root.best_value = root_value

    for iteration in range(config.iterations):
        node = root
        path = [root]
        action_path: list[TransformAction] = []
        # selection
        while not node.untried and node.children and node.depth < config.max_depth:
            best_score = -math.inf
            best_child = None
            best_action = None
            for action, child_key in node.children:
                child = nodes[child_key]
                reward = 1.0 / (1.0 + child.best_value)
                score = reward + config.exploration * math.sqrt(
                    math.log(max(node.visits, 1)) / child.visits
                )
                if score > best_score:
                    best_score, best_child, best_action = score, child, action
            node = best_child
            path.append(node)
            action_path.append(best_action)
        # expansion
        if node.untried and node.depth < config.max_depth:
            action = node.untried.pop(0)
            child_state = apply_action(node.state, action)
            child = get_node(child_state, node.depth + 1)
            if all(key != canonical_key(child_state) for _, key in node.children):
                node.children.append((action, canonical_key(child_state)))
            node = child
            path.append(node)
            action_path.append(action)
        value = rollout(node.state)
        record(node.state, value)
        for visited in path:
            visited.visits += 1
            visited.value_sum += value
            visited.best_value = min(visited.best_value, value)
        if collect_trace:
            trace.append(
                {
                    "iteration": iteration,
                    "actions": [str(a) for a in action_path],
                    "sampled_cost": round(value, 9),
                }
            )

    def complete(state: DiffForest) -> tuple[InterfaceSpec, CostBreakdown]:
        spec = best_mapping(
            state,
            catalog,
            screen,
            lambda s: interface_cost(s, queries, params).total,
            log=queries,
        )
        return spec, interface_cost(spec, queries, params)

    # complete-search the best states by rollout value; the initial state is
    # always included so the result never loses to the static fallback
    ranked = sorted(evaluated.values(), key=lambda t: (t[0], t[1]))
    candidates = [state for _, _, state in ranked[: max(1, config.complete_top)]]
    if all(canonical_key(s) != canonical_key(root_state) for s in candidates):
        candidates.append(root_state)

    spec, breakdown, final_state = None, None, None
    for state in candidates:
        cand_spec, cand_breakdown = complete(state)
        if breakdown is None or cand_breakdown.total < breakdown.total:
            spec, breakdown, final_state = cand_spec, cand_breakdown, state
    return SearchResult(final_state, spec, breakdown, config, trace)


def exhaustive_search(
    queries: list[Query],
    catalog: TableCatalog,
    screen: tuple[int, int],
    depth: int,
    params: Optional[CostParams] = None,
    budget: int = 10_000,
) -> SearchResult:
    """Exact minimum-cost interface over all states within `depth` actions.

    Breadth-first over the transformation graph with duplicate-state
    elimination; raises BudgetExceededError past `budget` distinct states.
    """
    params = params or CostParams(screen=screen)
    root_state = initial_forest(queries, catalog)
    seen = {canonical_key(root_state)}
    frontier = [root_state]
    states = [root_state]
    for _ in range(depth):
        next_frontier = []
        for state in frontier:
            for action in applicable_actions(state):
                child = apply_action(state, action)
                key = canonical_key(child)
                if key in seen:
                    continue
                seen.add(key)
                if len(seen) > budget:
                    raise BudgetExceededError(
                        f"more than {budget} states within depth {depth}"
                    )
                next_frontier.append(child)
                states.append(child)
        frontier = next_frontier

    best: Optional[tuple[float, int, InterfaceSpec, CostBreakdown, DiffForest]] = None
    for order, state in enumerate(states):
        spec = best_mapping(
            state,
            catalog,
            screen,
            lambda s: interface_cost(s, queries, params).total,
            log=queries,
        )
        breakdown = interface_cost(spec, queries, params)
        key = (breakdown.total, order)
        if best is None or key < best[:2]:
            best = (breakdown.total, order, spec, breakdown, state)
    assert best is not None
    return SearchResult(best[4], best[2], best[3], SearchConfig(iterations=0), [])
