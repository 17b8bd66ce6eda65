from random import Random

import pytest

from queryboard.difftree import (
    Choice,
    ChoiceKind,
    Static,
    enumerate_queries,
    initial_forest,
    merge_asts,
    result_schema,
)
from queryboard.errors import NotApplicableError
from queryboard.sqlast import parse_query
from queryboard.transforms import (
    TransformAction,
    applicable_actions,
    apply_action,
    apply_cluster,
    apply_pushdown,
    apply_split,
)

from reference import random_catalog, random_query


def _forest_queries(state, cap=200):
    out = set()
    truncated = False
    for tree in state.trees:
        result = enumerate_queries(tree, cap=cap)
        truncated = truncated or result.truncated
        out.update(result.queries)
    return out, truncated


def test_initial_actions_running_example(running_queries, catalog):
    state = initial_forest(running_queries, catalog)
    actions = applicable_actions(state)
    kinds = {a.kind for a in actions}
    assert "cluster" in kinds
    assert "split" in kinds
    # Q3 has no WHERE and a different projection, so the root children do
    # not align for a pushdown
    assert "pushdown" not in kinds


def test_pushdown_appears_after_cluster_split(running_queries, catalog):
    state = initial_forest(running_queries, catalog)
    state = apply_action(state, [a for a in applicable_actions(state) if a.kind == "cluster"][0])
    state = apply_action(state, [a for a in applicable_actions(state) if a.kind == "split"][0])
    kinds = {a.kind for a in applicable_actions(state)}
    assert "pushdown" in kinds


def test_choice_free_forest_has_no_actions(catalog):
    state = initial_forest([parse_query("SELECT a FROM T")], catalog)
    assert applicable_actions(state) == []


def test_cluster_groups_matching_signatures(running_queries, catalog):
    tree = merge_asts(running_queries, catalog)
    clustered = apply_cluster(tree, tree.choice_ids()[0])
    root = clustered.root
    assert isinstance(root, Choice) and len(root.children) == 2
    inner = root.children[0]
    assert isinstance(inner, Choice) and len(inner.children) == 2  # Q1, Q2


def test_cluster_not_applicable_all_distinct(catalog):
    queries = [
        parse_query("SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p"),
        parse_query("SELECT a, count(*) FROM T GROUP BY a"),
    ]
    tree = merge_asts(queries, catalog)
    with pytest.raises(NotApplicableError):
        apply_cluster(tree, tree.choice_ids()[0])


def test_cluster_preserves_enumeration(running_queries, catalog):
    tree = merge_asts(running_queries, catalog)
    before = set(enumerate_queries(tree).queries)
    after = set(enumerate_queries(apply_cluster(tree, tree.choice_ids()[0])).queries)
    assert before == after


def test_split_grows_forest_by_children_minus_one(running_queries, catalog):
    state = initial_forest(running_queries, catalog)
    root = state.trees[0].root
    split = apply_split(state, state.trees[0].tree_id)
    assert len(split.trees) == len(state.trees) + len(root.children) - 1


def test_split_requires_any_root(catalog):
    state = initial_forest([parse_query("SELECT a FROM T")], catalog)
    with pytest.raises(NotApplicableError):
        apply_split(state, state.trees[0].tree_id)


def test_split_preserves_union(running_queries, catalog):
    state = initial_forest(running_queries, catalog)
    before, _ = _forest_queries(state)
    after, _ = _forest_queries(apply_split(state, state.trees[0].tree_id))
    assert before == after


def test_pushdown_factors_common_label(catalog):
    queries = [
        parse_query("SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p"),
        parse_query("SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p"),
    ]
    tree = merge_asts(queries, catalog)
    pushed = apply_pushdown(tree, tree.choice_ids()[0])
    assert isinstance(pushed.root, Static)
    where_slot = pushed.root.children[2]
    assert isinstance(where_slot, Choice) and where_slot.kind is ChoiceKind.ANY
    # one more pushdown splits the comparison into attribute and literal
    pushed2 = apply_pushdown(pushed, where_slot.node_id)
    where2 = pushed2.root.children[2]
    assert isinstance(where2, Static) and where2.label == ("cmp", "=")
    assert all(isinstance(c, Choice) for c in where2.children)
    assert len(set(enumerate_queries(pushed2).queries)) == 4


def test_pushdown_mixed_presence_creates_opt(catalog):
    queries = [
        parse_query("SELECT a, count(*) FROM T GROUP BY a"),
        parse_query("SELECT a, count(*) FROM T WHERE b = 4 GROUP BY a"),
    ]
    tree = merge_asts(queries, catalog)
    pushed = apply_pushdown(tree, tree.choice_ids()[0])
    where_slot = pushed.root.children[2]
    assert isinstance(where_slot, Choice) and where_slot.kind is ChoiceKind.OPT
    assert set(enumerate_queries(pushed).queries) == set(queries)


def test_pushdown_rejected_when_shapes_differ(running_queries, catalog):
    tree = merge_asts(running_queries, catalog)
    with pytest.raises(NotApplicableError):
        apply_pushdown(tree, tree.choice_ids()[0])


def test_pushdown_enlarges_enumeration(catalog):
    queries = [
        parse_query("SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p"),
        parse_query("SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p"),
    ]
    tree = merge_asts(queries, catalog)
    before = set(enumerate_queries(tree).queries)
    pushed = apply_pushdown(tree, tree.choice_ids()[0])
    inner_any = [c for c in pushed.choice_nodes()][0]
    pushed2 = apply_pushdown(pushed, inner_any.node_id)
    after = set(enumerate_queries(pushed2).queries)
    assert before <= after
    assert len(after) == 4  # 2x2 cross product


def test_actions_are_deterministic_and_sorted(running_queries, catalog):
    state = initial_forest(running_queries, catalog)
    first = applicable_actions(state)
    second = applicable_actions(state)
    assert first == second
    assert first == sorted(first, key=TransformAction.sort_key)


def test_inputs_never_mutated(running_queries, catalog):
    state = initial_forest(running_queries, catalog)
    snapshot = state.trees[0].root
    action = applicable_actions(state)[0]
    apply_action(state, action)
    assert state.trees[0].root is snapshot


def test_expressiveness_preservation_random_logs():
    """100 seeded random logs; every applicable action keeps every
    expressible query and leaves result schemas untouched."""
    rng = Random(4242)
    violations = 0
    for _ in range(100):
        catalog = random_catalog(rng, n_rows=rng.randint(5, 30))
        log = [random_query(rng, catalog) for _ in range(rng.randint(2, 4))]
        state = initial_forest(log, catalog)
        before, truncated = _forest_queries(state)
        if truncated:
            continue
        schemas_before = {
            t.tree_id: result_schema(t, catalog).types() for t in state.trees
        }
        for action in applicable_actions(state):
            after_state = apply_action(state, action)
            after, truncated = _forest_queries(after_state)
            if truncated:
                continue
            if not before <= after:
                violations += 1
            for tree in after_state.trees:
                if result_schema(tree, catalog).types() not in schemas_before.values():
                    violations += 1
    assert violations == 0
