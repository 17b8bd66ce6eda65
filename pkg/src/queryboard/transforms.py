"""Expressiveness-preserving DiffTree transformations.

Three rewrite rules drive the search space:

* Cluster groups the children of an ANY node by shallow structural
  signature, nesting each multi-member group under a fresh inner ANY.
* Split promotes the children of a root ANY to sibling DiffTrees.
* Pushdown anti-unifies the children of an ANY one level: the shared root
  label moves above the ANY and each differing child position receives a
  fresh ANY (or OPT, when an optional clause is present in only some
  alternatives) over the distinct alternatives.

Every rule preserves or enlarges the set of expressible queries and never
changes a tree's result schema.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .difftree import (
    Choice,
    ChoiceKind,
    DiffForest,
    DiffNode,
    DiffTree,
    IdAllocator,
    OPTIONAL_SLOTS,
    Static,
    iter_nodes,
    same_structure,
)
from .errors import NotApplicableError


@dataclass(frozen=True)
class TransformAction:
    kind: str  # cluster | split | pushdown
    tree_id: str
    node_id: Optional[str] = None  # ANY node for cluster/pushdown

    def sort_key(self) -> tuple:
        nid = self.node_id or ""
        return (len(self.tree_id), self.tree_id, len(nid), nid, self.kind)

    def __str__(self) -> str:
        if self.node_id:
            return f"{self.kind}({self.tree_id},{self.node_id})"
        return f"{self.kind}({self.tree_id})"


# --- applicability ----------------------------------------------------------


def _signature(node: DiffNode) -> tuple:
    """Shallow grouping key: root label, arity, multiset of child labels."""
    if isinstance(node, Static):
        head = ("static",) + node.label
    else:
        head = ("choice", node.kind.value)
    child_labels = []
    for child in node.children:
        if isinstance(child, Static):
            child_labels.append(("static",) + child.label)
        else:
            child_labels.append(("choice", child.kind.value))
    return (head, len(node.children), tuple(sorted(map(repr, child_labels))))


def _cluster_groups(node: Choice) -> list[list[int]]:
    groups: dict[tuple, list[int]] = {}
    for i, child in enumerate(node.children):
        groups.setdefault(_signature(child), []).append(i)
    return list(groups.values())


def _cluster_applicable(node: Choice) -> bool:
    if node.kind is not ChoiceKind.ANY:
        return False
    groups = _cluster_groups(node)
    return len(groups) >= 2 and any(len(g) >= 2 for g in groups)


def _is_query_shaped(node: DiffNode) -> bool:
    if isinstance(node, Static):
        return node.label == ("query",)
    return node.kind is ChoiceKind.ANY and all(_is_query_shaped(c) for c in node.children)


def _split_applicable(tree: DiffTree) -> bool:
    root = tree.root
    return (
        isinstance(root, Choice)
        and root.kind is ChoiceKind.ANY
        and len(root.children) >= 2
        and all(_is_query_shaped(c) for c in root.children)
    )


def _pushdown_applicable(node: Choice) -> bool:
    if node.kind is not ChoiceKind.ANY:
        return False
    children = node.children
    if any(isinstance(c, Choice) for c in children):
        return False
    labels = {c.label for c in children}  # type: ignore[union-attr]
    if len(labels) != 1:
        return False
    arities = {len(c.children) for c in children}
    if len(arities) != 1:
        return False
    label = children[0].label  # type: ignore[union-attr]
    optional = OPTIONAL_SLOTS.get(label, ())
    presence = {
        tuple(not _slot_absent(c.children[s]) for s in optional) for c in children
    }
    if len(presence) > 1:
        # alternatives differ in which optional clauses exist; only aligned
        # when everything outside those slots is identical
        arity = len(children[0].children)
        for i in range(arity):
            if i in optional:
                continue
            first = children[0].children[i]
            if any(not same_structure(c.children[i], first) for c in children[1:]):
                return False
    return True


def _slot_absent(node: DiffNode) -> bool:
    return isinstance(node, Static) and node.label == ("nothing",)


def applicable_actions(state: DiffForest) -> list[TransformAction]:
    """Every action that applies to `state` without error, in stable order."""
    actions = []
    for tree in state.trees:
        if _split_applicable(tree):
            actions.append(TransformAction("split", tree.tree_id))
        for node in iter_nodes(tree.root):
            if not isinstance(node, Choice):
                continue
            if _cluster_applicable(node):
                actions.append(TransformAction("cluster", tree.tree_id, node.node_id))
            if _pushdown_applicable(node):
                actions.append(TransformAction("pushdown", tree.tree_id, node.node_id))
    actions.sort(key=TransformAction.sort_key)
    return actions


# --- application -------------------------------------------------------------


def _replace_node(node: DiffNode, target_id: str, replacement: DiffNode) -> DiffNode:
    if isinstance(node, Choice) and node.node_id == target_id:
        return replacement
    if not node.children:
        return node
    new_children = tuple(_replace_node(c, target_id, replacement) for c in node.children)
    if new_children == node.children:
        return node
    if isinstance(node, Static):
        return Static(node.label, new_children)
    return Choice(node.kind, new_children, node.node_id)


def apply_cluster(tree: DiffTree, any_id: str, alloc: Optional[IdAllocator] = None) -> DiffTree:
    """Nest same-signature children of the ANY under fresh inner ANY nodes."""
    node = tree.find_choice(any_id)
    if node is None or node.kind is not ChoiceKind.ANY:
        raise NotApplicableError(f"no ANY node {any_id!r} in tree {tree.tree_id!r}")
    if not _cluster_applicable(node):
        raise NotApplicableError(f"cluster not applicable at {any_id!r}")
    alloc = alloc or IdAllocator()
    new_children = []
    for group in _cluster_groups(node):
        if len(group) == 1:
            new_children.append(node.children[group[0]])
        else:
            members = tuple(node.children[i] for i in group)
            new_children.append(Choice(ChoiceKind.ANY, members, alloc.node_id()))
    replacement = Choice(ChoiceKind.ANY, tuple(new_children), node.node_id)
    return DiffTree(tree.tree_id, _replace_node(tree.root, any_id, replacement))


def apply_split(state: DiffForest, tree_id: str) -> DiffForest:
    """Replace a tree whose root is an ANY with one tree per root child."""
    tree = state.find_tree(tree_id)
    if tree is None:
        raise NotApplicableError(f"no tree {tree_id!r}")
    if not _split_applicable(tree):
        raise NotApplicableError(f"split not applicable to tree {tree_id!r}")
    alloc = state.allocator()
    root = tree.root
    assert isinstance(root, Choice)
    new_trees = [DiffTree(alloc.tree_id(), child) for child in root.children]
    trees: list[DiffTree] = []
    for t in state.trees:
        if t.tree_id == tree_id:
            trees.extend(new_trees)
        else:
            trees.append(t)
    return DiffForest(tuple(trees), alloc.next_node, alloc.next_tree)


def apply_pushdown(tree: DiffTree, any_id: str, alloc: Optional[IdAllocator] = None) -> DiffTree:
    """Anti-unify the ANY's children one level deep.

    The common root label moves above the choice; each child position keeps
    the shared subtree when all alternatives agree and otherwise becomes a
    fresh ANY over the distinct alternatives. An optional clause slot that is
    present in only some alternatives becomes an OPT (around an inner ANY
    when the present alternatives also differ).
    """
    node = tree.find_choice(any_id)
    if node is None or node.kind is not ChoiceKind.ANY:
        raise NotApplicableError(f"no ANY node {any_id!r} in tree {tree.tree_id!r}")
    if not _pushdown_applicable(node):
        raise NotApplicableError(f"pushdown not applicable at {any_id!r}")
    alloc = alloc or IdAllocator()
    children = node.children
    label = children[0].label  # type: ignore[union-attr]
    optional = OPTIONAL_SLOTS.get(label, ())
    arity = len(children[0].children)

    new_children: list[DiffNode] = []
    for i in range(arity):
        alternatives = [c.children[i] for c in children]
        distinct: list[DiffNode] = []
        for alt in alternatives:
            if not any(same_structure(alt, seen) for seen in distinct):
                distinct.append(alt)
        if len(distinct) == 1:
            new_children.append(distinct[0])
            continue
        if i in optional and any(_slot_absent(a) for a in alternatives):
            present = [a for a in distinct if not _slot_absent(a)]
            if len(present) == 1:
                inner: DiffNode = present[0]
                new_children.append(Choice(ChoiceKind.OPT, (inner,), alloc.node_id()))
            else:
                opt_id = alloc.node_id()
                inner = Choice(ChoiceKind.ANY, tuple(present), alloc.node_id())
                new_children.append(Choice(ChoiceKind.OPT, (inner,), opt_id))
            continue
        new_children.append(Choice(ChoiceKind.ANY, tuple(distinct), alloc.node_id()))

    replacement: DiffNode = Static(label, tuple(new_children))
    return DiffTree(tree.tree_id, _replace_node(tree.root, any_id, replacement))


def apply_action(state: DiffForest, action: TransformAction) -> DiffForest:
    """Apply one action, threading the forest's id counters."""
    if action.kind == "split":
        return apply_split(state, action.tree_id)
    tree = state.find_tree(action.tree_id)
    if tree is None:
        raise NotApplicableError(f"no tree {action.tree_id!r}")
    alloc = state.allocator()
    if action.kind == "cluster":
        new_tree = apply_cluster(tree, action.node_id, alloc)
    elif action.kind == "pushdown":
        new_tree = apply_pushdown(tree, action.node_id, alloc)
    else:
        raise NotApplicableError(f"unknown action kind {action.kind!r}")
    trees = tuple(new_tree if t.tree_id == action.tree_id else t for t in state.trees)
    return DiffForest(trees, alloc.next_node, alloc.next_tree)
