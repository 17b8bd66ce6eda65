"""DiffTrees: query ASTs generalized with choice nodes.

A DiffTree compactly represents a set of queries. Choice nodes encode the
syntactic differences: ANY picks one child, OPT toggles its single child,
SUBSET picks a non-empty ordered child subset, MULTI repeats its child
template one or more times. A DiffForest (ordered list of DiffTrees) is the
unit the transformation search operates on.

Queries are mirrored into generic labeled trees so that structural merging
and matching work uniformly. The query node has fixed arity; optional
clauses (WHERE, LIMIT) occupy dedicated slots holding a `nothing` marker
when absent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Union

from .errors import (
    IncompleteBindingError,
    IndexOutOfRangeError,
    NotDynamicError,
    SchemaIncompatibleError,
    UnboundChoiceError,
)
from .relation import ColumnType, TableCatalog
from .sqlast import (
    AggCall,
    And,
    Between,
    Cmp,
    ColumnRef,
    InList,
    Literal,
    Or,
    OrderItem,
    Query,
    ResultSchema,
    SelectItem,
    Star,
    default_name,
    render_expr,
    render_predicate,
    render_sql,
)

MULTI_ENUM_MAX = 3  # repetition bound when enumerating MULTI expansions
_VARIANT_CAP = 4096  # safety bound for schema-variant enumeration


class ChoiceKind(Enum):
    ANY = "any"
    OPT = "opt"
    MULTI = "multi"
    SUBSET = "subset"


@dataclass(frozen=True)
class Static:
    label: tuple
    children: tuple["DiffNode", ...] = ()


@dataclass(frozen=True)
class Choice:
    kind: ChoiceKind
    children: tuple["DiffNode", ...]
    node_id: str


DiffNode = Union[Static, Choice]

NOTHING = Static(("nothing",))

# positions of optional clause slots per fixed-arity label
OPTIONAL_SLOTS = {("query",): (2, 5)}

# Binding selections: ANY -> int index or {"value": v}, OPT -> bool,
# SUBSET -> sequence of int indices, MULTI -> list of nested bindings.
Binding = dict


class IdAllocator:
    """Hands out forest-unique choice-node and tree ids."""

    def __init__(self, next_node: int = 0, next_tree: int = 0):
        self.next_node = next_node
        self.next_tree = next_tree

    def node_id(self) -> str:
        nid = f"c{self.next_node}"
        self.next_node += 1
        return nid

    def tree_id(self) -> str:
        tid = f"t{self.next_tree}"
        self.next_tree += 1
        return tid


# --- AST <-> generic tree -------------------------------------------------


def ast_to_tree(query: Query) -> Static:
    select = Static(("select",), tuple(_item_to_node(i) for i in query.select))
    frm = Static(("from", query.table))
    where = _pred_to_node(query.where) if query.where is not None else NOTHING
    group = Static(("groupby",), tuple(_expr_to_node(c) for c in query.group_by))
    order = Static(
        ("orderby",),
        tuple(Static(("ord", o.desc), (_expr_to_node(o.col),)) for o in query.order_by),
    )
    limit = Static(("limit", query.limit)) if query.limit is not None else NOTHING
    return Static(("query",), (select, frm, where, group, order, limit))


def _item_to_node(item: SelectItem) -> Static:
    return Static(("item", item.alias), (_expr_to_node(item.expr),))


def _expr_to_node(expr) -> Static:
    if isinstance(expr, ColumnRef):
        return Static(("col", expr.table, expr.name))
    if isinstance(expr, Literal):
        return Static(("lit", expr.kind.value, expr.value))
    if isinstance(expr, Star):
        return Static(("star",))
    if isinstance(expr, AggCall):
        return Static(("agg", expr.fn), (_expr_to_node(expr.arg),))
    raise TypeError(f"not an expression: {expr!r}")


def _pred_to_node(pred) -> Static:
    if isinstance(pred, Cmp):
        return Static(("cmp", pred.op), (_expr_to_node(pred.lhs), _expr_to_node(pred.rhs)))
    if isinstance(pred, And):
        return Static(("and",), (_pred_to_node(pred.lhs), _pred_to_node(pred.rhs)))
    if isinstance(pred, Or):
        return Static(("or",), (_pred_to_node(pred.lhs), _pred_to_node(pred.rhs)))
    if isinstance(pred, Between):
        return Static(
            ("between",),
            (_expr_to_node(pred.col), _expr_to_node(pred.lo), _expr_to_node(pred.hi)),
        )
    if isinstance(pred, InList):
        return Static(("inlist",), (_expr_to_node(pred.col),) + tuple(_expr_to_node(i) for i in pred.items))
    raise TypeError(f"not a predicate: {pred!r}")


def tree_to_ast(node: DiffNode) -> Query:
    if isinstance(node, Choice):
        raise UnboundChoiceError(f"choice node {node.node_id} still unbound")
    if node.label != ("query",):
        raise ValueError(f"not a query node: {node.label}")
    select_node, from_node, where_node, group_node, order_node, limit_node = node.children
    items = tuple(_node_to_item(c) for c in _concrete_children(select_node) if c.label != ("nothing",))
    table = _require_static(from_node, "from")[1]
    where = None if _is_nothing(where_node) else _node_to_pred(where_node)
    group = tuple(
        _node_to_expr(c) for c in _concrete_children(group_node) if c.label != ("nothing",)
    )
    orders = []
    for c in _concrete_children(order_node):
        if c.label == ("nothing",):
            continue
        c = _require_node(c)
        orders.append(OrderItem(_node_to_expr(c.children[0]), c.label[1]))
    limit_label = _require_node(limit_node).label
    limit = None if limit_label == ("nothing",) else limit_label[1]
    return Query(items, table, where, group, tuple(orders), limit)


def _is_nothing(node: DiffNode) -> bool:
    return isinstance(node, Static) and node.label == ("nothing",)


def _require_node(node: DiffNode) -> Static:
    if isinstance(node, Choice):
        raise UnboundChoiceError(f"choice node {node.node_id} still unbound")
    return node


def _require_static(node: DiffNode, kind: str) -> tuple:
    node = _require_node(node)
    if node.label[0] != kind:
        raise ValueError(f"expected {kind} node, got {node.label}")
    return node.label


def _concrete_children(node: DiffNode) -> tuple[Static, ...]:
    return tuple(_require_node(c) for c in _require_node(node).children)


def _node_to_item(node: Static) -> SelectItem:
    if node.label[0] != "item":
        raise ValueError(f"expected select item, got {node.label}")
    return SelectItem(_node_to_expr(node.children[0]), node.label[1])


def _node_to_expr(node: DiffNode):
    node = _require_node(node)
    head = node.label[0]
    if head == "col":
        return ColumnRef(node.label[2], node.label[1])
    if head == "lit":
        return Literal(ColumnType(node.label[1]), node.label[2])
    if head == "star":
        return Star()
    if head == "agg":
        return AggCall(node.label[1], _node_to_expr(node.children[0]))
    raise ValueError(f"expected expression node, got {node.label}")


def _node_to_pred(node: DiffNode):
    node = _require_node(node)
    head = node.label[0]
    if head == "cmp":
        return Cmp(node.label[1], _node_to_expr(node.children[0]), _node_to_expr(node.children[1]))
    if head == "and":
        return And(_node_to_pred(node.children[0]), _node_to_pred(node.children[1]))
    if head == "or":
        return Or(_node_to_pred(node.children[0]), _node_to_pred(node.children[1]))
    if head == "between":
        return Between(
            _node_to_expr(node.children[0]),
            _node_to_expr(node.children[1]),
            _node_to_expr(node.children[2]),
        )
    if head == "inlist":
        return InList(
            _node_to_expr(node.children[0]),
            tuple(_node_to_expr(c) for c in node.children[1:]),
        )
    raise ValueError(f"expected predicate node, got {node.label}")


# --- trees and forests ----------------------------------------------------


@dataclass(frozen=True)
class DiffTree:
    tree_id: str
    root: DiffNode

    def choice_nodes(self) -> list[Choice]:
        return [n for n in iter_nodes(self.root) if isinstance(n, Choice)]

    def choice_ids(self) -> list[str]:
        return [n.node_id for n in self.choice_nodes()]

    def find_choice(self, node_id: str) -> Optional[Choice]:
        for node in self.choice_nodes():
            if node.node_id == node_id:
                return node
        return None


@dataclass(frozen=True)
class DiffForest:
    trees: tuple[DiffTree, ...]
    next_node_id: int = 0
    next_tree_id: int = 0

    def allocator(self) -> IdAllocator:
        return IdAllocator(self.next_node_id, self.next_tree_id)

    def find_tree(self, tree_id: str) -> Optional[DiffTree]:
        for tree in self.trees:
            if tree.tree_id == tree_id:
                return tree
        return None

    def choice_nodes(self) -> list[tuple[DiffTree, Choice]]:
        return [(t, c) for t in self.trees for c in t.choice_nodes()]


def iter_nodes(node: DiffNode) -> Iterator[DiffNode]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(current.children))


def contains_choice(node: DiffNode) -> bool:
    return any(isinstance(n, Choice) for n in iter_nodes(node))


def is_dynamic(node: DiffNode) -> bool:
    """Dynamic nodes are choice nodes and every ancestor of one."""
    return contains_choice(node)


def strip_ids(node: DiffNode):
    """Structure-only view used for equality and transposition keys."""
    if isinstance(node, Static):
        return ("s", node.label, tuple(strip_ids(c) for c in node.children))
    return ("c", node.kind.value, tuple(strip_ids(c) for c in node.children))


def same_structure(a: DiffNode, b: DiffNode) -> bool:
    return strip_ids(a) == strip_ids(b)


# --- merging ---------------------------------------------------------------


def merge_asts(
    asts: list[Query],
    catalog: Optional[TableCatalog] = None,
    tree_id: str = "t0",
    alloc: Optional[IdAllocator] = None,
) -> DiffTree:
    """Merge queries into one DiffTree: distinct ASTs under a single ANY root.

    A single distinct query stays a plain static tree. When a catalog is
    given, union compatibility of the result schemas is verified.
    """
    if not asts:
        raise ValueError("merge_asts requires at least one query")
    if catalog is not None:
        from .sqlast import infer_result_schema

        schemas = [infer_result_schema(q, catalog) for q in asts]
        first = schemas[0]
        for q, schema in zip(asts[1:], schemas[1:]):
            if not first.union_compatible(schema):
                raise SchemaIncompatibleError(
                    f"result schema {schema} of {render_sql(q)!r} is not union "
                    f"compatible with {first}"
                )
    distinct: list[Query] = []
    for q in asts:
        if q not in distinct:
            distinct.append(q)
    if len(distinct) == 1:
        return DiffTree(tree_id, ast_to_tree(distinct[0]))
    alloc = alloc or IdAllocator()
    root = Choice(ChoiceKind.ANY, tuple(ast_to_tree(q) for q in distinct), alloc.node_id())
    return DiffTree(tree_id, root)


def initial_forest(asts: list[Query], catalog: TableCatalog) -> DiffForest:
    """Partition queries by result-schema union compatibility, merge each."""
    from .sqlast import infer_result_schema

    partitions: list[tuple[tuple, list[Query]]] = []
    for q in asts:
        key = infer_result_schema(q, catalog).types()
        for part_key, part in partitions:
            if part_key == key:
                part.append(q)
                break
        else:
            partitions.append((key, [q]))
    alloc = IdAllocator()
    trees = [
        merge_asts(part, catalog, alloc.tree_id(), alloc) for _, part in partitions
    ]
    return DiffForest(tuple(trees), alloc.next_node, alloc.next_tree)


# --- node schemas -----------------------------------------------------------


@dataclass(frozen=True)
class SchemaExpr:
    bases: tuple[str, ...]
    suffix: str = ""

    def __str__(self) -> str:
        body = "|".join(self.bases)
        if self.suffix and len(self.bases) > 1:
            return f"({body}){self.suffix}"
        return body + self.suffix


@dataclass(frozen=True)
class NodeSchema:
    exprs: tuple[SchemaExpr, ...]

    def __str__(self) -> str:
        return "<" + ",".join(str(e) for e in self.exprs) + ">"


def _base_of(node: DiffNode) -> str:
    if isinstance(node, Static):
        return node.label[1] if node.label[0] == "lit" else "AST"
    bases = _dedup(_base_of(c) for c in node.children)
    return bases[0] if len(bases) == 1 else "AST"


def _dedup(items) -> tuple:
    seen: list = []
    for item in items:
        if item not in seen:
            seen.append(item)
    return tuple(seen)


def node_schema(node: DiffNode, catalog: Optional[TableCatalog] = None) -> NodeSchema:
    """Type-level description of the variation below a dynamic node.

    Alternation collapses when homogeneous (AST|AST|AST normalizes to AST);
    static dynamic nodes concatenate the schemas of their dynamic children.
    """
    if not is_dynamic(node):
        raise NotDynamicError("node carries no variation")
    if isinstance(node, Static):
        exprs: tuple[SchemaExpr, ...] = ()
        for child in node.children:
            if is_dynamic(child):
                exprs += node_schema(child, catalog).exprs
        return NodeSchema(exprs)
    if node.kind is ChoiceKind.ANY:
        return NodeSchema((SchemaExpr(_dedup(_base_of(c) for c in node.children)),))
    if node.kind is ChoiceKind.OPT:
        return NodeSchema((SchemaExpr((_base_of(node.children[0]),), "?"),))
    if node.kind is ChoiceKind.SUBSET:
        return NodeSchema(tuple(SchemaExpr((_base_of(c),), "?") for c in node.children))
    return NodeSchema((SchemaExpr((_base_of(node.children[0]),), "*"),))


# --- result schema ----------------------------------------------------------


def result_schema(tree: DiffTree, catalog: TableCatalog) -> ResultSchema:
    """Pointwise type list shared by every expressible query.

    Column names are kept only where all alternatives agree, mirroring how
    a merged tree loses names that differ between its queries.
    """
    schemas = []
    for select_node, table in _select_variants(tree.root):
        schemas.append(_variant_schema(select_node, table, catalog))
        if len(schemas) > _VARIANT_CAP:
            break
    if not schemas:
        raise SchemaIncompatibleError("tree expresses no query")
    types = tuple(t for _, t in schemas[0])
    names: list[Optional[str]] = [n for n, _ in schemas[0]]
    for schema in schemas[1:]:
        if tuple(t for _, t in schema) != types:
            raise SchemaIncompatibleError(
                f"variant schemas disagree: {schema} vs {schemas[0]}"
            )
        for i, (name, _) in enumerate(schema):
            if names[i] != name:
                names[i] = None
    return ResultSchema(tuple(zip(names, types)))


def _select_variants(node: DiffNode) -> Iterator[tuple[Static, str]]:
    """Yield (concrete select subtree, table name) combinations."""
    for query_node in _query_alternatives(node):
        select_slot, from_slot = query_node.children[0], query_node.children[1]
        tables = [lbl[1] for lbl in _slot_labels(from_slot, "from")]
        for concrete in _enumerate_node(select_slot, MULTI_ENUM_MAX):
            for table in tables:
                yield concrete, table


def _query_alternatives(node: DiffNode) -> Iterator[Static]:
    if isinstance(node, Static):
        if node.label != ("query",):
            raise SchemaIncompatibleError(f"tree root is not query-shaped: {node.label}")
        yield node
        return
    if node.kind in (ChoiceKind.ANY, ChoiceKind.SUBSET, ChoiceKind.MULTI):
        for child in node.children:
            yield from _query_alternatives(child)
        return
    raise SchemaIncompatibleError("a whole query cannot be optional")


def _slot_labels(node: DiffNode, kind: str) -> list[tuple]:
    if isinstance(node, Static):
        if node.label[0] != kind:
            raise SchemaIncompatibleError(f"expected {kind} slot, got {node.label}")
        return [node.label]
    labels: list[tuple] = []
    for child in node.children:
        for lbl in _slot_labels(child, kind):
            if lbl not in labels:
                labels.append(lbl)
    return labels


def _variant_schema(select_node: Static, table: str, catalog: TableCatalog):
    cat_table = catalog.table(table)
    out = []
    for child in select_node.children:
        item = _node_to_item(_require_node(child))
        name = item.alias or default_name(item.expr)
        expr = item.expr
        if isinstance(expr, ColumnRef):
            ctype = cat_table.column(expr.name).ctype
        elif isinstance(expr, Literal):
            ctype = expr.kind
        else:
            assert isinstance(expr, AggCall)
            ctype = ColumnType.NUM
        out.append((name, ctype))
    return out


# --- binding / substitution -------------------------------------------------


def validate_binding_ids(tree: DiffTree, binding: Binding) -> None:
    known = set(tree.choice_ids())
    for node_id in binding:
        if node_id not in known:
            raise IndexOutOfRangeError(f"unknown choice node id {node_id!r}")


def bind(tree: DiffTree, binding: Binding) -> Query:
    """Resolve every reachable choice node and return the concrete query."""
    validate_binding_ids(tree, binding)
    nodes = _substitute(tree.root, binding)
    if len(nodes) != 1:
        raise IncompleteBindingError("root substitution did not yield a single query")
    return tree_to_ast(nodes[0])


def _substitute(node: DiffNode, binding: Binding) -> list[Static]:
    if isinstance(node, Static):
        children: list[Static] = []
        for child in node.children:
            children.extend(_substitute(child, binding))
        return [Static(node.label, tuple(children))]

    if node.node_id not in binding:
        raise IncompleteBindingError(f"no selection for choice node {node.node_id!r}")
    selection = binding[node.node_id]

    if node.kind is ChoiceKind.ANY:
        if isinstance(selection, dict) and "value" in selection:
            return [_value_node(node, selection["value"])]
        if not isinstance(selection, int) or isinstance(selection, bool):
            raise IndexOutOfRangeError(
                f"ANY node {node.node_id!r} needs an index, got {selection!r}"
            )
        if not 0 <= selection < len(node.children):
            raise IndexOutOfRangeError(
                f"index {selection} out of range for {node.node_id!r}"
            )
        return _substitute(node.children[selection], binding)

    if node.kind is ChoiceKind.OPT:
        if not isinstance(selection, bool):
            raise IndexOutOfRangeError(
                f"OPT node {node.node_id!r} needs a bool, got {selection!r}"
            )
        if selection:
            return _substitute(node.children[0], binding)
        return [NOTHING]

    if node.kind is ChoiceKind.SUBSET:
        if not isinstance(selection, (list, tuple)) or not selection:
            raise IndexOutOfRangeError(
                f"SUBSET node {node.node_id!r} needs a non-empty index list"
            )
        out: list[Static] = []
        seen = set()
        for idx in selection:
            if not isinstance(idx, int) or not 0 <= idx < len(node.children):
                raise IndexOutOfRangeError(f"index {idx!r} out of range for {node.node_id!r}")
            if idx in seen:
                raise IndexOutOfRangeError(f"duplicate index {idx} for {node.node_id!r}")
            seen.add(idx)
            out.extend(_substitute(node.children[idx], binding))
        return out

    # MULTI: one nested binding per repetition of the template
    if not isinstance(selection, (list, tuple)) or not selection:
        raise IndexOutOfRangeError(
            f"MULTI node {node.node_id!r} needs a non-empty list of bindings"
        )
    out = []
    for sub in selection:
        if not isinstance(sub, dict):
            raise IndexOutOfRangeError(
                f"MULTI node {node.node_id!r} repetitions must be bindings"
            )
        out.extend(_substitute(node.children[0], {**binding, **sub}))
    return out


def _value_node(node: Choice, value) -> Static:
    """Value override for an ANY over literals (slider / brush / click)."""
    if any(not (isinstance(c, Static) and c.label[0] == "lit") for c in node.children):
        raise IndexOutOfRangeError(
            f"value binding only valid for literal choice nodes ({node.node_id!r})"
        )
    kinds = {c.label[1] for c in node.children}
    if len(kinds) != 1:
        raise IndexOutOfRangeError(
            f"value binding needs a single literal kind ({node.node_id!r})"
        )
    kind = kinds.pop()
    if kind == "num" and not isinstance(value, (int, float)):
        raise IndexOutOfRangeError(f"num value expected for {node.node_id!r}, got {value!r}")
    if kind == "str" and not isinstance(value, str):
        raise IndexOutOfRangeError(f"str value expected for {node.node_id!r}, got {value!r}")
    return Static(("lit", kind, value))


# --- enumeration -------------------------------------------------------------


@dataclass
class EnumerationResult:
    queries: list[Query]
    truncated: bool = False


def enumerate_queries(
    tree: DiffTree, cap: int = 500, multi_max: int = MULTI_ENUM_MAX
) -> EnumerationResult:
    """All distinct concrete queries, sorted by their canonical SQL.

    MULTI nodes are expanded up to `multi_max` repetitions. When more than
    `cap` distinct queries exist the result is truncated and flagged.
    """
    seen: dict[Query, None] = {}
    truncated = False
    for concrete in _enumerate_node(tree.root, multi_max):
        query = tree_to_ast(concrete)
        if query not in seen:
            if len(seen) >= cap:
                truncated = True
                break
            seen[query] = None
    queries = sorted(seen, key=render_sql)
    return EnumerationResult(queries, truncated)


def _enumerate_node(node: DiffNode, multi_max: int) -> Iterator[Static]:
    for seq in _enumerate_seq(node, multi_max):
        if len(seq) == 1:
            yield seq[0]


def _enumerate_seq(node: DiffNode, multi_max: int) -> Iterator[list[Static]]:
    """Yield the concrete node sequences one tree position can expand to."""
    if isinstance(node, Static):
        for combo in _product([_enumerate_seq(c, multi_max) for c in node.children]):
            flat: list[Static] = []
            for part in combo:
                flat.extend(part)
            yield [Static(node.label, tuple(flat))]
        return
    if node.kind is ChoiceKind.ANY:
        for child in node.children:
            yield from _enumerate_seq(child, multi_max)
        return
    if node.kind is ChoiceKind.OPT:
        yield [NOTHING]
        yield from _enumerate_seq(node.children[0], multi_max)
        return
    if node.kind is ChoiceKind.SUBSET:
        for mask in range(1, 2 ** len(node.children)):
            picked = [node.children[i] for i in range(len(node.children)) if mask >> i & 1]
            for combo in _product([_enumerate_seq(c, multi_max) for c in picked]):
                flat = []
                for part in combo:
                    flat.extend(part)
                yield flat
        return
    # MULTI
    for count in range(1, multi_max + 1):
        for combo in _product(
            [_enumerate_seq(node.children[0], multi_max) for _ in range(count)]
        ):
            flat = []
            for part in combo:
                flat.extend(part)
            yield flat


def _product(iterable_factories: list) -> Iterator[list]:
    """itertools.product over re-iterable generators of lists."""
    pools = [list(f) for f in iterable_factories]
    if not pools:
        yield []
        return
    indices = [0] * len(pools)
    if any(not p for p in pools):
        return
    while True:
        yield [pools[i][indices[i]] for i in range(len(pools))]
        for i in reversed(range(len(pools))):
            indices[i] += 1
            if indices[i] < len(pools[i]):
                break
            indices[i] = 0
        else:
            return


# --- structural matching (expresses) -----------------------------------------


def expresses(tree: DiffTree, query: Query) -> Optional[Binding]:
    """Witness binding if the tree can produce `query`, else None."""
    target = ast_to_tree(query)
    for binding in _match_node(tree.root, target):
        return binding
    return None


def witnesses(tree: DiffTree, query: Query, limit: int = 64) -> list[Binding]:
    """Up to `limit` distinct witness bindings for `query`."""
    target = ast_to_tree(query)
    out = []
    for binding in _match_node(tree.root, target):
        out.append(binding)
        if len(out) >= limit:
            break
    return out


def _match_node(pattern: DiffNode, target: Static) -> Iterator[Binding]:
    if isinstance(pattern, Static):
        if pattern.label != target.label:
            return
        yield from _match_seq(list(pattern.children), list(target.children), {})
        return
    if pattern.kind is ChoiceKind.ANY:
        for i, child in enumerate(pattern.children):
            for binding in _match_node(child, target):
                yield {**binding, pattern.node_id: i}
        return
    if pattern.kind is ChoiceKind.OPT:
        if target.label == ("nothing",):
            yield {pattern.node_id: False}
            return
        for binding in _match_node(pattern.children[0], target):
            yield {**binding, pattern.node_id: True}
        return
    # SUBSET / MULTI match sequences; a single node is a length-1 sequence
    yield from _match_seq([pattern], [target], {})


def _match_seq(patterns: list, targets: list, binding: Binding) -> Iterator[Binding]:
    if not patterns:
        if not targets:
            yield binding
        return
    head, rest = patterns[0], patterns[1:]

    if isinstance(head, Static) or head.kind in (ChoiceKind.ANY, ChoiceKind.OPT):
        if isinstance(head, Choice) and head.kind is ChoiceKind.OPT and (
            not targets or targets[0].label != ("nothing",)
        ):
            # absent in a variable-arity list: consume nothing
            for b in _match_seq(rest, targets, {**binding, head.node_id: False}):
                yield b
            if not targets:
                return
            for b0 in _match_node(head.children[0], targets[0]):
                merged = _merge_bindings(binding, {**b0, head.node_id: True})
                if merged is None:
                    continue
                yield from _match_seq(rest, targets[1:], merged)
            return
        if not targets:
            return
        for b0 in _match_node(head, targets[0]):
            merged = _merge_bindings(binding, b0)
            if merged is None:
                continue
            yield from _match_seq(rest, targets[1:], merged)
        return

    if head.kind is ChoiceKind.SUBSET:
        yield from _match_subset(head, rest, targets, binding)
        return

    # MULTI: try 1..n repetitions of the template
    yield from _match_multi(head, rest, targets, binding, [])


def _match_subset(head: Choice, rest: list, targets: list, binding: Binding) -> Iterator[Binding]:
    def pick(ci: int, remaining: list, chosen: tuple, b: Binding) -> Iterator[Binding]:
        if ci == len(head.children):
            if chosen:
                yield from _match_seq(rest, remaining, {**b, head.node_id: chosen})
            return
        # skip child ci
        yield from pick(ci + 1, remaining, chosen, b)
        # or match child ci against the next target
        if remaining:
            for b0 in _match_node(head.children[ci], remaining[0]):
                merged = _merge_bindings(b, b0)
                if merged is not None:
                    yield from pick(ci + 1, remaining[1:], chosen + (ci,), merged)

    yield from pick(0, targets, (), binding)


def _match_multi(
    head: Choice, rest: list, targets: list, binding: Binding, reps: list
) -> Iterator[Binding]:
    if reps:
        yield from _match_seq(rest, targets, {**binding, head.node_id: list(reps)})
    if not targets:
        return
    for b0 in _match_node(head.children[0], targets[0]):
        yield from _match_multi(head, rest, targets[1:], binding, reps + [b0])


def _merge_bindings(a: Binding, b: Binding) -> Optional[Binding]:
    merged = dict(a)
    for key, value in b.items():
        if key in merged and merged[key] != value:
            return None
        merged[key] = value
    return merged


# --- rendering fragments ------------------------------------------------------


def render_fragment(node: DiffNode) -> str:
    """Human-readable SQL-ish text for widget option labels."""
    if isinstance(node, Choice):
        return f"{node.kind.value} group"
    if contains_choice(node):
        return f"{node.label[0]} group"
    head = node.label[0]
    if head == "query":
        return render_sql(tree_to_ast(node))
    if head in ("cmp", "and", "or", "between", "inlist"):
        return render_predicate(_node_to_pred(node))
    if head in ("col", "lit", "star", "agg"):
        return render_expr(_node_to_expr(node))
    if head == "item":
        item = _node_to_item(node)
        text = render_expr(item.expr)
        return f"{text} AS {item.alias}" if item.alias else text
    if head == "select":
        return ", ".join(render_fragment(c) for c in node.children)
    if head == "from":
        return str(node.label[1])
    if head == "groupby":
        return ", ".join(render_fragment(c) for c in node.children)
    if head == "ord":
        suffix = " DESC" if node.label[1] else ""
        return render_fragment(node.children[0]) + suffix
    if head == "orderby":
        return ", ".join(render_fragment(c) for c in node.children)
    if head == "limit":
        return f"LIMIT {node.label[1]}"
    if head == "nothing":
        return "(none)"
    return head


# --- serialization -------------------------------------------------------------


def node_to_json(node: DiffNode, tree_id: str, counter: list) -> dict:
    if isinstance(node, Static):
        nid = f"{tree_id}.s{counter[0]}"
        counter[0] += 1
        return {
            "id": nid,
            "kind": "static",
            "label": _label_str(node.label),
            "children": [node_to_json(c, tree_id, counter) for c in node.children],
        }
    return {
        "id": node.node_id,
        "kind": node.kind.value,
        "label": node.kind.value,
        "children": [node_to_json(c, tree_id, counter) for c in node.children],
    }


def _label_str(label: tuple) -> str:
    return ":".join("" if p is None else str(p) for p in label)


def forest_to_json(forest: DiffForest) -> dict:
    return {
        "trees": [
            {"id": t.tree_id, "root": node_to_json(t.root, t.tree_id, [0])}
            for t in forest.trees
        ]
    }


def canonical_key(forest: DiffForest) -> str:
    """Structure-only serialization used for transposition detection."""
    return json.dumps([strip_ids(t.root) for t in forest.trees], default=str)
