"""Maps a DiffForest to candidate interfaces: charts, widgets, in-chart
interactions, and a layout tree.

Mapping is schema matching: each DiffTree's result schema constrains the
chart types it can draw, and each choice node's node schema constrains the
interactions that can control it. Numeric range predicates whose bounds are
both choice nodes are detected as (lo, hi) pairs so a single range slider,
an x-brush, or a pan/zoom gesture can drive them together.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from random import Random
from typing import Callable, Iterator, Optional, Union

from . import difftree as dt
from .difftree import (
    Binding,
    Choice,
    ChoiceKind,
    DiffForest,
    DiffNode,
    DiffTree,
    Static,
    iter_nodes,
)
from .errors import SchemaIncompatibleError
from .executor import execute
from .relation import ColumnType, TableCatalog
from .sqlast import Query

# Estimated component sizes (px). The cost model needs sizes for the layout
# penalty; these are the documented defaults.
CHART_SIZE = (320, 240)
LIST_OPTION_HEIGHT = 24
LIST_WIDTH = 160
DROPDOWN_SIZE = (160, 32)
TOGGLE_SIZE = (160, 32)
SLIDER_SIZE = (240, 48)

COMPLETE_SEARCH_CAP = 4096
BEAM_WIDTH = 32
LAYOUT_ENUM_MAX_COMPONENTS = 7

CHART_ORDER = ("bar", "line", "scatter", "table")


# --- spec data types --------------------------------------------------------


@dataclass
class VisSpec:
    vis_id: str
    chart: str
    encodings: dict[str, int]
    tree_id: str
    width: int = CHART_SIZE[0]
    height: int = CHART_SIZE[1]


@dataclass
class WidgetSpec:
    widget_id: str
    widget_type: str
    targets: tuple[str, ...]  # one node id, or (lo, hi) for range_slider
    tree_id: str
    options: Optional[list[dict]] = None
    value_range: Optional[tuple[float, float, float]] = None  # min, max, step
    column: Optional[str] = None
    default: object = None
    width: int = LIST_WIDTH
    height: int = LIST_OPTION_HEIGHT


@dataclass
class VisInteractionSpec:
    interaction_id: str
    event: str  # click | multi_click | brush_x | pan_zoom
    source_vis: str
    targets: tuple[tuple[str, ...], ...]  # each target: (node,) or (lo, hi)
    columns: tuple[int, ...]  # derivation column per target
    domains: tuple[tuple, ...] = ()  # literal child values per target node


@dataclass
class LayoutNode:
    leaf: Optional[str] = None
    dir: Optional[str] = None  # "h" | "v"
    children: tuple["LayoutNode", ...] = ()
    width: int = 0
    height: int = 0


@dataclass
class InterfaceSpec:
    forest: DiffForest
    visualizations: list[VisSpec]
    widgets: list[WidgetSpec]
    vis_interactions: list[VisInteractionSpec]
    layout: LayoutNode
    defaults: dict[str, Binding]

    def component_sizes(self) -> dict[str, tuple[int, int]]:
        sizes = {v.vis_id: (v.width, v.height) for v in self.visualizations}
        sizes.update({w.widget_id: (w.width, w.height) for w in self.widgets})
        return sizes

    def interaction_for(self, node_id: str):
        for w in self.widgets:
            if node_id in w.targets:
                return w
        for ix in self.vis_interactions:
            for target in ix.targets:
                if node_id in target:
                    return ix
        return None

    def component_of(self, interaction) -> str:
        if isinstance(interaction, WidgetSpec):
            return interaction.widget_id
        return interaction.source_vis


# --- schema-derived tree facts ------------------------------------------------


@dataclass(frozen=True)
class RangePair:
    lo_id: str
    hi_id: str
    table: str
    column: str


def _literal_values(node: Choice) -> Optional[tuple]:
    values = []
    for child in node.children:
        if not (isinstance(child, Static) and child.label[0] == "lit"):
            return None
        values.append(child.label[2])
    return tuple(values)


def _query_statics(tree: DiffTree) -> list[Static]:
    return [n for n in iter_nodes(tree.root) if isinstance(n, Static) and n.label == ("query",)]


def literal_contexts(tree: DiffTree) -> dict[str, tuple[str, str]]:
    """Map literal choice nodes to the (table, column) they are compared to."""
    out: dict[str, tuple[str, str]] = {}
    for qnode in _query_statics(tree):
        from_slot = qnode.children[1]
        if not isinstance(from_slot, Static) or from_slot.label[0] != "from":
            continue
        table = from_slot.label[1]
        for node in iter_nodes(qnode):
            if not isinstance(node, Static):
                continue
            head = node.label[0]
            if head == "cmp":
                lhs, rhs = node.children
                if isinstance(lhs, Static) and lhs.label[0] == "col" and isinstance(rhs, Choice):
                    out.setdefault(rhs.node_id, (table, lhs.label[2]))
                if isinstance(rhs, Static) and rhs.label[0] == "col" and isinstance(lhs, Choice):
                    out.setdefault(lhs.node_id, (table, rhs.label[2]))
            elif head == "between":
                col = node.children[0]
                if isinstance(col, Static) and col.label[0] == "col":
                    for bound in node.children[1:]:
                        if isinstance(bound, Choice):
                            out.setdefault(bound.node_id, (table, col.label[2]))
            elif head == "inlist":
                col = node.children[0]
                if isinstance(col, Static) and col.label[0] == "col":
                    for item in node.children[1:]:
                        if isinstance(item, Choice):
                            out.setdefault(item.node_id, (table, col.label[2]))
    return out


def detect_range_pairs(tree: DiffTree) -> list[RangePair]:
    """Find (lo, hi) choice-node pairs forming numeric range predicates.

    Both Between bounds and >=/<= comparison pairs over the same column
    normalize to one pair, in tree pre-order.
    """
    pairs: list[RangePair] = []
    used: set[str] = set()

    def is_num_choice(node: DiffNode) -> bool:
        if not isinstance(node, Choice) or node.kind is not ChoiceKind.ANY:
            return False
        values = _literal_values(node)
        return values is not None and all(isinstance(v, (int, float)) for v in values)

    for qnode in _query_statics(tree):
        from_slot = qnode.children[1]
        if not isinstance(from_slot, Static) or from_slot.label[0] != "from":
            continue
        table = from_slot.label[1]
        lo_bounds: dict[str, Choice] = {}
        hi_bounds: dict[str, Choice] = {}
        for node in iter_nodes(qnode):
            if not isinstance(node, Static):
                continue
            if node.label[0] == "between":
                col, lo, hi = node.children
                if (
                    isinstance(col, Static)
                    and col.label[0] == "col"
                    and is_num_choice(lo)
                    and is_num_choice(hi)
                    and lo.node_id not in used
                    and hi.node_id not in used
                ):
                    pairs.append(RangePair(lo.node_id, hi.node_id, table, col.label[2]))
                    used.update((lo.node_id, hi.node_id))
            elif node.label[0] == "cmp":
                lhs, rhs = node.children
                if not (isinstance(lhs, Static) and lhs.label[0] == "col" and is_num_choice(rhs)):
                    continue
                if rhs.node_id in used:
                    continue
                op = node.label[1]
                if op in (">=", ">"):
                    lo_bounds.setdefault(lhs.label[2], rhs)
                elif op in ("<=", "<"):
                    hi_bounds.setdefault(lhs.label[2], rhs)
        for col_name, lo_node in lo_bounds.items():
            hi_node = hi_bounds.get(col_name)
            if hi_node is not None and lo_node.node_id not in used and hi_node.node_id not in used:
                pairs.append(RangePair(lo_node.node_id, hi_node.node_id, table, col_name))
                used.update((lo_node.node_id, hi_node.node_id))
    return pairs


def column_sources(tree: DiffTree, catalog: TableCatalog) -> list[list[Optional[tuple[str, str]]]]:
    """Per result column: the (table, column) passthrough of every variant.

    Entries are None when a variant computes the position (aggregate or
    literal) instead of projecting a stored column.
    """
    variants = list(dt._select_variants(tree.root))
    if not variants:
        raise SchemaIncompatibleError("tree expresses no query")
    width = len(variants[0][0].children)
    out: list[list[Optional[tuple[str, str]]]] = [[] for _ in range(width)]
    for select_node, table in variants:
        for i, item in enumerate(select_node.children):
            expr = item.children[0] if isinstance(item, Static) and item.children else None
            if isinstance(expr, Static) and expr.label[0] == "col":
                out[i].append((table, expr.label[2]))
            else:
                out[i].append(None)
    return out


def stable_source(sources: list[Optional[tuple[str, str]]]) -> Optional[tuple[str, str]]:
    first = sources[0]
    if first is None:
        return None
    return first if all(s == first for s in sources) else None


def column_classes(tree: DiffTree, catalog: TableCatalog) -> list[str]:
    """'categorical' or 'quantitative' per result column.

    str columns are categorical; num columns are categorical only when every
    variant projects a stored column with low cardinality.
    """
    schema = dt.result_schema(tree, catalog)
    sources = column_sources(tree, catalog)
    classes = []
    for i, (_, ctype) in enumerate(schema.columns):
        if ctype is ColumnType.STR:
            classes.append("categorical")
            continue
        per_variant = sources[i]
        low = bool(per_variant) and all(
            src is not None and catalog.column(src[0], src[1]).stats.low_cardinality
            for src in per_variant
        )
        classes.append("categorical" if low else "quantitative")
    return classes


# --- visualization candidates ---------------------------------------------------


def candidate_visualizations(tree: DiffTree, catalog: TableCatalog) -> list[VisSpec]:
    """Chart types whose encoding constraints the result schema satisfies.

    Deterministic order bar < line < scatter < table; table always applies.
    """
    schema = dt.result_schema(tree, catalog)
    classes = column_classes(tree, catalog)
    types = [t for _, t in schema.columns]
    vis_id = f"vis-{tree.tree_id}"
    out: list[VisSpec] = []

    def color_encoding() -> dict[str, int]:
        if len(types) >= 3 and classes[2] == "categorical":
            return {"color": 2}
        return {}

    if len(types) >= 2 and classes[0] == "categorical" and types[1] is ColumnType.NUM and classes[1] == "quantitative":
        out.append(VisSpec(vis_id, "bar", {"x": 0, "y": 1, **color_encoding()}, tree.tree_id))
    if (
        len(types) >= 2
        and types[0] is ColumnType.NUM
        and classes[0] == "quantitative"
        and types[1] is ColumnType.NUM
        and classes[1] == "quantitative"
    ):
        out.append(VisSpec(vis_id, "line", {"x": 0, "y": 1, **color_encoding()}, tree.tree_id))
        out.append(VisSpec(vis_id, "scatter", {"x": 0, "y": 1, **color_encoding()}, tree.tree_id))
    out.append(VisSpec(vis_id, "table", {}, tree.tree_id))
    return out


# --- widget candidates ------------------------------------------------------------


def _list_size(option_count: int) -> tuple[int, int]:
    return (LIST_WIDTH, LIST_OPTION_HEIGHT * max(1, option_count))


def _slider_range(catalog: TableCatalog, table: str, column: str) -> Optional[tuple[float, float, float]]:
    col = catalog.column(table, column)
    stats = col.stats
    if col.ctype is not ColumnType.NUM or stats.min is None or stats.max is None:
        return None
    if stats.min == stats.max:
        step: float = 1
    elif stats.domain_sample and all(isinstance(v, int) for v in stats.domain_sample):
        step = 1
    else:
        step = (stats.max - stats.min) / 100
    return (stats.min, stats.max, step)


def first_binding(node: DiffNode) -> Binding:
    """Deterministic fallback binding: first option everywhere."""
    if isinstance(node, Static):
        out: Binding = {}
        for child in node.children:
            out.update(first_binding(child))
        return out
    if node.kind is ChoiceKind.ANY:
        return {node.node_id: 0, **first_binding(node.children[0])}
    if node.kind is ChoiceKind.OPT:
        return {node.node_id: False}
    if node.kind is ChoiceKind.SUBSET:
        return {node.node_id: (0,), **first_binding(node.children[0])}
    return {node.node_id: [first_binding(node.children[0])]}


def candidate_widgets(
    node: Choice,
    catalog: TableCatalog,
    tree_id: str,
    context: Optional[tuple[str, str]] = None,
) -> list[WidgetSpec]:
    """Widgets compatible with one choice node (range pairs handled apart).

    ANY takes single-select widgets (plus a slider when its literals compare
    against a column with numeric stats), OPT a toggle, SUBSET a checkbox
    list, MULTI a repetition-count list.
    """
    wid = f"w-{node.node_id}"
    out: list[WidgetSpec] = []
    if node.kind is ChoiceKind.ANY:
        options = [
            {"label": dt.render_fragment(c), "index": i} for i, c in enumerate(node.children)
        ]
        w, h = _list_size(len(options))
        for wtype in ("button_list", "radio_list"):
            out.append(WidgetSpec(wid, wtype, (node.node_id,), tree_id, options=options, width=w, height=h))
        out.append(
            WidgetSpec(
                wid, "dropdown", (node.node_id,), tree_id, options=options,
                width=DROPDOWN_SIZE[0], height=DROPDOWN_SIZE[1],
            )
        )
        values = _literal_values(node)
        if (
            values is not None
            and all(isinstance(v, (int, float)) for v in values)
            and context is not None
        ):
            rng = _slider_range(catalog, *context)
            if rng is not None:
                out.append(
                    WidgetSpec(
                        wid, "slider", (node.node_id,), tree_id, value_range=rng,
                        column=context[1], width=SLIDER_SIZE[0], height=SLIDER_SIZE[1],
                    )
                )
        return out
    if node.kind is ChoiceKind.OPT:
        options = [{"label": "off", "value": False}, {"label": "on", "value": True}]
        return [
            WidgetSpec(
                wid, "toggle", (node.node_id,), tree_id, options=options,
                width=TOGGLE_SIZE[0], height=TOGGLE_SIZE[1],
            )
        ]
    if node.kind is ChoiceKind.SUBSET:
        options = [
            {"label": dt.render_fragment(c), "index": i} for i, c in enumerate(node.children)
        ]
        w, h = _list_size(len(options))
        return [
            WidgetSpec(wid, "checkbox_list", (node.node_id,), tree_id, options=options, width=w, height=h)
        ]
    # MULTI: repetition count, each repetition bound to the template default
    options = []
    for count in range(1, dt.MULTI_ENUM_MAX + 1):
        options.append(
            {
                "label": f"{count}x",
                "binding": [first_binding(node.children[0]) for _ in range(count)],
            }
        )
    w, h = _list_size(len(options))
    return [WidgetSpec(wid, "button_list", (node.node_id,), tree_id, options=options, width=w, height=h)]


def range_pair_widget(
    pair: RangePair, catalog: TableCatalog, tree_id: str
) -> Optional[WidgetSpec]:
    rng = _slider_range(catalog, pair.table, pair.column)
    if rng is None:
        return None
    return WidgetSpec(
        f"w-{pair.lo_id}-{pair.hi_id}",
        "range_slider",
        (pair.lo_id, pair.hi_id),
        tree_id,
        value_range=rng,
        column=pair.column,
        width=SLIDER_SIZE[0],
        height=SLIDER_SIZE[1],
    )


# --- visualization interaction candidates ----------------------------------------


def _domain_sample(catalog: TableCatalog, table: str, column: str) -> tuple:
    return tuple(catalog.column(table, column).stats.domain_sample)


def _stats_interval(catalog: TableCatalog, table: str, column: str) -> Optional[tuple]:
    stats = catalog.column(table, column).stats
    if stats.min is None or stats.max is None:
        return None
    return (stats.min, stats.max)


def candidate_vis_interactions(
    node: Choice,
    tree_id: str,
    forest: DiffForest,
    catalog: TableCatalog,
    chosen_vis: dict[str, VisSpec],
    context: Optional[tuple[str, str]],
) -> list[VisInteractionSpec]:
    """Click / multi-click candidates binding one literal choice node from
    another visualization's output values (domain containment enforced)."""
    values = _literal_values(node)
    if values is None or context is None:
        return []
    table, column = context
    sample = _domain_sample(catalog, table, column)
    if not sample or not set(values) <= set(sample):
        return []
    event = None
    if node.kind is ChoiceKind.ANY:
        event = "click"
    elif node.kind is ChoiceKind.SUBSET:
        event = "multi_click"
    if event is None:
        return []
    out = []
    for tree in forest.trees:
        if tree.tree_id == tree_id:
            continue  # the source chart must not depend on the target node
        vis = chosen_vis.get(tree.tree_id)
        if vis is None or vis.chart not in ("bar", "line", "scatter"):
            continue
        sources = column_sources(tree, catalog)
        for col_idx, per_variant in enumerate(sources):
            if stable_source(per_variant) == (table, column):
                out.append(
                    VisInteractionSpec(
                        f"ix-{event}-{node.node_id}",
                        event,
                        vis.vis_id,
                        ((node.node_id,),),
                        (col_idx,),
                        (values,),
                    )
                )
                break
    return out


def candidate_brushes(
    pair: RangePair,
    tree_id: str,
    forest: DiffForest,
    catalog: TableCatalog,
    chosen_vis: dict[str, VisSpec],
) -> list[VisInteractionSpec]:
    """Brush on another chart's x axis binding one (lo, hi) range pair."""
    interval = _stats_interval(catalog, pair.table, pair.column)
    if interval is None:
        return []
    out = []
    for tree in forest.trees:
        if tree.tree_id == tree_id:
            continue
        vis = chosen_vis.get(tree.tree_id)
        if vis is None or "x" not in vis.encodings or vis.chart == "table":
            continue
        sources = column_sources(tree, catalog)
        x_idx = vis.encodings["x"]
        if stable_source(sources[x_idx]) == (pair.table, pair.column):
            out.append(
                VisInteractionSpec(
                    f"ix-brush_x-{pair.lo_id}",
                    "brush_x",
                    vis.vis_id,
                    ((pair.lo_id, pair.hi_id),),
                    (x_idx,),
                )
            )
    return out


def candidate_pan_zoom(
    pair_x: RangePair,
    pair_y: RangePair,
    forest: DiffForest,
    catalog: TableCatalog,
    chosen_vis: dict[str, VisSpec],
) -> list[VisInteractionSpec]:
    """Pan/zoom on a scatter whose x and y columns carry the two range pairs.

    Unlike click and brush the gesture may target the scatter's own tree:
    panning re-executes the query feeding the chart being dragged.
    """
    out = []
    for tree in forest.trees:
        vis = chosen_vis.get(tree.tree_id)
        if vis is None or vis.chart != "scatter":
            continue
        sources = column_sources(tree, catalog)
        x_idx, y_idx = vis.encodings.get("x"), vis.encodings.get("y")
        if x_idx is None or y_idx is None:
            continue
        if stable_source(sources[x_idx]) != (pair_x.table, pair_x.column):
            continue
        if stable_source(sources[y_idx]) != (pair_y.table, pair_y.column):
            continue
        out.append(
            VisInteractionSpec(
                f"ix-pan_zoom-{pair_x.lo_id}",
                "pan_zoom",
                vis.vis_id,
                ((pair_x.lo_id, pair_x.hi_id), (pair_y.lo_id, pair_y.hi_id)),
                (x_idx, y_idx),
            )
        )
    return out


# --- layout ------------------------------------------------------------------------


def _bbox(node: LayoutNode) -> tuple[int, int]:
    return (node.width, node.height)


def _inner(direction: str, children: tuple[LayoutNode, ...]) -> LayoutNode:
    if direction == "h":
        width = sum(c.width for c in children)
        height = max(c.height for c in children)
    else:
        width = max(c.width for c in children)
        height = sum(c.height for c in children)
    return LayoutNode(dir=direction, children=children, width=width, height=height)


def _leaf(component: tuple[str, int, int]) -> LayoutNode:
    cid, w, h = component
    return LayoutNode(leaf=cid, width=w, height=h)


def enumerate_layouts(components: list[tuple[str, int, int]]) -> Iterator[LayoutNode]:
    """All binary H/V nestings over the fixed component order."""

    def build(lo: int, hi: int) -> Iterator[LayoutNode]:
        if hi - lo == 1:
            yield _leaf(components[lo])
            return
        for split in range(lo + 1, hi):
            for left in build(lo, split):
                for right in build(split, hi):
                    yield _inner("v", (left, right))
                    yield _inner("h", (left, right))

    yield from build(0, len(components))


def _overflow(node: LayoutNode, screen: tuple[int, int]) -> float:
    w, h = _bbox(node)
    return max(0.0, w / screen[0] - 1) + max(0.0, h / screen[1] - 1)


def _chain(components: list[tuple[str, int, int]], direction: str) -> LayoutNode:
    node = _leaf(components[0])
    for comp in components[1:]:
        node = _inner(direction, (node, _leaf(comp)))
    return node


def _balanced(components: list[tuple[str, int, int]], dirs: str) -> LayoutNode:
    def build(lo: int, hi: int, depth: int) -> LayoutNode:
        if hi - lo == 1:
            return _leaf(components[lo])
        mid = (lo + hi) // 2
        direction = dirs[depth % len(dirs)]
        return _inner(direction, (build(lo, mid, depth + 1), build(mid, hi, depth + 1)))

    return build(0, len(components), 0)


def layout_candidates(
    components: list[tuple[str, int, int]], cap: int = 512
) -> list[LayoutNode]:
    if len(components) > LAYOUT_ENUM_MAX_COMPONENTS:
        return [
            _chain(components, "v"),
            _chain(components, "h"),
            _balanced(components, "v"),
            _balanced(components, "h"),
            _balanced(components, "vh"),
            _balanced(components, "hv"),
        ]
    out = []
    for layout in enumerate_layouts(components):
        out.append(layout)
        if len(out) >= cap:
            break
    return out


def assign_layout(
    components: list[tuple[str, int, int]], screen: tuple[int, int]
) -> LayoutNode:
    """Overflow-minimizing binary nesting; ties prefer V at the root, then
    enumeration order."""
    if not components:
        raise ValueError("assign_layout requires at least one component")
    candidates = layout_candidates(components)
    best = None
    best_key = None
    for i, cand in enumerate(candidates):
        key = (_overflow(cand, screen), 0 if cand.dir in (None, "v") else 1, i)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    return best


def _random_layout(components: list[tuple[str, int, int]], rng: Random) -> LayoutNode:
    def build(lo: int, hi: int) -> LayoutNode:
        if hi - lo == 1:
            return _leaf(components[lo])
        split = rng.randrange(lo + 1, hi)
        direction = rng.choice(("v", "h"))
        return _inner(direction, (build(lo, split), build(split, hi)))

    return build(0, len(components))


def leaf_paths(layout: LayoutNode) -> dict[str, tuple[int, ...]]:
    out: dict[str, tuple[int, ...]] = {}

    def walk(node: LayoutNode, path: tuple[int, ...]) -> None:
        if node.leaf is not None:
            out[node.leaf] = path
            return
        for i, child in enumerate(node.children):
            walk(child, path + (i,))

    walk(layout, ())
    return out


def path_length(paths: dict[str, tuple[int, ...]], a: Optional[str], b: str) -> int:
    """Edges walked in the layout tree; a=None means starting at the root."""
    pb = paths[b]
    if a is None:
        return len(pb)
    pa = paths[a]
    common = 0
    for x, y in zip(pa, pb):
        if x != y:
            break
        common += 1
    return len(pa) + len(pb) - 2 * common


# --- default bindings -----------------------------------------------------------


def default_bindings(
    forest: DiffForest, log: Optional[list[Query]] = None
) -> dict[str, Binding]:
    """Witness of the first input query each tree expresses; first-option
    binding when no log is supplied."""
    out: dict[str, Binding] = {}
    for tree in forest.trees:
        chosen: Optional[Binding] = None
        for query in log or []:
            witness = dt.expresses(tree, query)
            if witness is not None:
                chosen = witness
                break
        out[tree.tree_id] = chosen if chosen is not None else first_binding(tree.root)
    return out


# --- interaction units (exact cover of choice nodes) ------------------------------


@dataclass
class _UnitCandidate:
    covers: tuple[str, ...]
    interaction: Union[WidgetSpec, VisInteractionSpec]


@dataclass
class _ForestFacts:
    contexts: dict[str, tuple[str, str]]
    pairs: dict[str, RangePair]  # keyed by lo node id
    pair_members: dict[str, RangePair]  # every member -> its pair
    tree_of: dict[str, str]
    nodes: dict[str, Choice]
    order: list[str]  # forest pre-order of choice node ids


def _collect_facts(forest: DiffForest) -> _ForestFacts:
    contexts: dict[str, tuple[str, str]] = {}
    pairs: dict[str, RangePair] = {}
    members: dict[str, RangePair] = {}
    tree_of: dict[str, str] = {}
    nodes: dict[str, Choice] = {}
    order: list[str] = []
    for tree in forest.trees:
        contexts.update(literal_contexts(tree))
        for pair in detect_range_pairs(tree):
            pairs[pair.lo_id] = pair
            members[pair.lo_id] = pair
            members[pair.hi_id] = pair
        for node in tree.choice_nodes():
            tree_of[node.node_id] = tree.tree_id
            nodes[node.node_id] = node
            order.append(node.node_id)
    return _ForestFacts(contexts, pairs, members, tree_of, nodes, order)


def _unit_candidates(
    node_id: str,
    facts: _ForestFacts,
    forest: DiffForest,
    catalog: TableCatalog,
    chosen_vis: dict[str, VisSpec],
) -> list[_UnitCandidate]:
    node = facts.nodes[node_id]
    tree_id = facts.tree_of[node_id]
    out: list[_UnitCandidate] = []
    for widget in candidate_widgets(node, catalog, tree_id, facts.contexts.get(node_id)):
        out.append(_UnitCandidate((node_id,), widget))
    for ix in candidate_vis_interactions(
        node, tree_id, forest, catalog, chosen_vis, facts.contexts.get(node_id)
    ):
        out.append(_UnitCandidate((node_id,), ix))
    pair = facts.pairs.get(node_id)
    if pair is not None:
        widget = range_pair_widget(pair, catalog, tree_id)
        if widget is not None:
            out.append(_UnitCandidate((pair.lo_id, pair.hi_id), widget))
        for ix in candidate_brushes(pair, tree_id, forest, catalog, chosen_vis):
            out.append(_UnitCandidate((pair.lo_id, pair.hi_id), ix))
        other_pairs = [p for p in facts.pairs.values() if p != pair]
        for other in other_pairs:
            ordered = _order_pair_ids(facts.order, pair, other)
            if ordered[0] != node_id:
                continue  # pan_zoom candidates attach to the first member
            for ix in candidate_pan_zoom(pair, other, forest, catalog, chosen_vis):
                out.append(
                    _UnitCandidate((pair.lo_id, pair.hi_id, other.lo_id, other.hi_id), ix)
                )
    return out


def _order_pair_ids(order: list[str], a: RangePair, b: RangePair) -> list[str]:
    ids = [a.lo_id, a.hi_id, b.lo_id, b.hi_id]
    return sorted(ids, key=order.index)


# --- spec assembly ------------------------------------------------------------------


def _assemble(
    forest: DiffForest,
    chosen_vis: dict[str, VisSpec],
    assignments: list[_UnitCandidate],
    layout: LayoutNode,
    defaults: dict[str, Binding],
) -> InterfaceSpec:
    widgets = []
    interactions = []
    for cand in assignments:
        if isinstance(cand.interaction, WidgetSpec):
            widgets.append(_with_default(cand.interaction, defaults))
        else:
            interactions.append(cand.interaction)
    vis = [chosen_vis[t.tree_id] for t in forest.trees]
    return InterfaceSpec(forest, vis, widgets, interactions, layout, defaults)


def _with_default(widget: WidgetSpec, defaults: dict[str, Binding]) -> WidgetSpec:
    binding = defaults.get(widget.tree_id, {})
    if widget.widget_type == "range_slider":
        default = tuple(binding.get(t) for t in widget.targets)
    else:
        default = binding.get(widget.targets[0])
    return WidgetSpec(
        widget.widget_id,
        widget.widget_type,
        widget.targets,
        widget.tree_id,
        options=widget.options,
        value_range=widget.value_range,
        column=widget.column,
        default=default,
        width=widget.width,
        height=widget.height,
    )


def _components(
    forest: DiffForest,
    chosen_vis: dict[str, VisSpec],
    assignments: list[_UnitCandidate],
) -> list[tuple[str, int, int]]:
    """Layout leaves in order: each tree's chart, then its widgets."""
    out = []
    for tree in forest.trees:
        vis = chosen_vis[tree.tree_id]
        out.append((vis.vis_id, vis.width, vis.height))
        for cand in assignments:
            w = cand.interaction
            if isinstance(w, WidgetSpec) and w.tree_id == tree.tree_id:
                out.append((w.widget_id, w.width, w.height))
    return out


def sample_mapping(
    forest: DiffForest,
    catalog: TableCatalog,
    screen: tuple[int, int],
    seed: int,
    log: Optional[list[Query]] = None,
) -> InterfaceSpec:
    """One uniformly sampled valid interface; deterministic per seed."""
    rng = Random(seed)
    facts = _collect_facts(forest)
    chosen_vis = {
        tree.tree_id: rng.choice(candidate_visualizations(tree, catalog))
        for tree in forest.trees
    }
    assignments: list[_UnitCandidate] = []
    covered: set[str] = set()
    for node_id in facts.order:
        if node_id in covered:
            continue
        cands = _unit_candidates(node_id, facts, forest, catalog, chosen_vis)
        pick = rng.choice(cands)
        assignments.append(pick)
        covered.update(pick.covers)
    components = _components(forest, chosen_vis, assignments)
    layout = _random_layout(components, rng)
    defaults = default_bindings(forest, log)
    return _assemble(forest, chosen_vis, assignments, layout, defaults)


def _mapping_space_bound(
    forest: DiffForest, catalog: TableCatalog, facts: _ForestFacts
) -> float:
    bound = 1.0
    all_vis = {
        tree.tree_id: candidate_visualizations(tree, catalog) for tree in forest.trees
    }
    for cands in all_vis.values():
        bound *= len(cands)
    # unit candidates depend on chosen vis; over-count with every vis allowed
    permissive = {tid: cands[0] for tid, cands in all_vis.items()}
    n_components = len(forest.trees)
    for node_id in facts.order:
        cands = _unit_candidates(node_id, facts, forest, catalog, permissive)
        bound *= max(1, len(cands) + 2)  # slack for vis-dependent interactions
        n_components += 1
    n = min(n_components, LAYOUT_ENUM_MAX_COMPONENTS)
    bound *= max(1, math.comb(2 * (n - 1), n - 1) // max(1, n)) * 2 ** max(0, n - 1)
    return bound


def best_mapping(
    forest: DiffForest,
    catalog: TableCatalog,
    screen: tuple[int, int],
    cost_fn: Callable[[InterfaceSpec], float],
    log: Optional[list[Query]] = None,
    cap: int = COMPLETE_SEARCH_CAP,
    beam_width: int = BEAM_WIDTH,
) -> InterfaceSpec:
    """Cost-minimizing interface over all candidates.

    Complete enumeration while the candidate product stays within `cap`;
    beyond that a beam over the per-decision choices, scoring partials by
    completing them greedily. Ties break toward the earliest candidate in
    enumeration order.
    """
    facts = _collect_facts(forest)
    defaults = default_bindings(forest, log)
    vis_lists = [
        (tree.tree_id, candidate_visualizations(tree, catalog)) for tree in forest.trees
    ]

    def spec_candidates(
        chosen_vis: dict[str, VisSpec], assignments: list[_UnitCandidate]
    ) -> Iterator[InterfaceSpec]:
        components = _components(forest, chosen_vis, assignments)
        for layout in layout_candidates(components):
            yield _assemble(forest, chosen_vis, assignments, layout, defaults)

    def enumerate_assignments(
        chosen_vis: dict[str, VisSpec], idx: int, covered: set[str], acc: list[_UnitCandidate]
    ) -> Iterator[list[_UnitCandidate]]:
        while idx < len(facts.order) and facts.order[idx] in covered:
            idx += 1
        if idx == len(facts.order):
            yield list(acc)
            return
        node_id = facts.order[idx]
        for cand in _unit_candidates(node_id, facts, forest, catalog, chosen_vis):
            acc.append(cand)
            yield from enumerate_assignments(
                chosen_vis, idx + 1, covered | set(cand.covers), acc
            )
            acc.pop()

    if _mapping_space_bound(forest, catalog, facts) <= cap:
        best: Optional[InterfaceSpec] = None
        best_cost = math.inf
        for vis_combo in _product_dicts(vis_lists):
            for assignments in enumerate_assignments(vis_combo, 0, set(), []):
                for spec in spec_candidates(vis_combo, assignments):
                    cost = cost_fn(spec)
                    if cost < best_cost:
                        best, best_cost = spec, cost
        assert best is not None
        return best

    return _beam_mapping(
        forest, catalog, screen, cost_fn, facts, vis_lists, defaults, beam_width
    )


def _product_dicts(
    vis_lists: list[tuple[str, list[VisSpec]]]
) -> Iterator[dict[str, VisSpec]]:
    def build(idx: int, acc: dict[str, VisSpec]) -> Iterator[dict[str, VisSpec]]:
        if idx == len(vis_lists):
            yield dict(acc)
            return
        tree_id, cands = vis_lists[idx]
        for vis in cands:
            acc[tree_id] = vis
            yield from build(idx + 1, acc)
        acc.pop(tree_id, None)

    yield from build(0, {})


def _beam_mapping(
    forest: DiffForest,
    catalog: TableCatalog,
    screen: tuple[int, int],
    cost_fn: Callable[[InterfaceSpec], float],
    facts: _ForestFacts,
    vis_lists: list[tuple[str, list[VisSpec]]],
    defaults: dict[str, Binding],
    beam_width: int,
) -> InterfaceSpec:
    def complete(chosen_vis: dict[str, VisSpec], assignments: list[_UnitCandidate]):
        vis = dict(chosen_vis)
        for tree_id, cands in vis_lists:
            vis.setdefault(tree_id, cands[0])
        done = list(assignments)
        covered = set()
        for cand in done:
            covered.update(cand.covers)
        for node_id in facts.order:
            if node_id in covered:
                continue
            cand = _unit_candidates(node_id, facts, forest, catalog, vis)[0]
            done.append(cand)
            covered.update(cand.covers)
        components = _components(forest, vis, done)
        layout = assign_layout(components, screen)
        return _assemble(forest, vis, done, layout, defaults)

    # beam state: (chosen_vis, assignments, covered)
    beam: list[tuple[dict[str, VisSpec], list[_UnitCandidate], set[str]]] = [({}, [], set())]
    for tree_id, cands in vis_lists:
        expanded = []
        for vis, assignments, covered in beam:
            for cand in cands:
                expanded.append(({**vis, tree_id: cand}, assignments, covered))
        beam = _prune(expanded, complete, cost_fn, beam_width)
    for node_id in facts.order:
        expanded = []
        for vis, assignments, covered in beam:
            if node_id in covered:
                expanded.append((vis, assignments, covered))
                continue
            for cand in _unit_candidates(node_id, facts, forest, catalog, vis):
                expanded.append((vis, assignments + [cand], covered | set(cand.covers)))
        beam = _prune(expanded, complete, cost_fn, beam_width)

    best_spec = None
    best_cost = math.inf
    for vis, assignments, _ in beam:
        components = _components(forest, vis, assignments)
        pool = layout_candidates(components, cap=64)
        if len(components) > LAYOUT_ENUM_MAX_COMPONENTS:
            pool = pool + [
                _random_layout(components, Random(seed)) for seed in range(256)
            ]
        for layout in pool:
            spec = _assemble(forest, vis, assignments, layout, defaults)
            cost = cost_fn(spec)
            if cost < best_cost:
                best_spec, best_cost = spec, cost
    assert best_spec is not None
    return best_spec


def _prune(states, complete, cost_fn, beam_width):
    scored = []
    for i, (vis, assignments, covered) in enumerate(states):
        cost = cost_fn(complete(vis, assignments))
        scored.append((cost, i, (vis, assignments, covered)))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [s[2] for s in scored[:beam_width]]


# --- serialization --------------------------------------------------------------------


def layout_to_json(node: LayoutNode) -> dict:
    if node.leaf is not None:
        return {"leaf": node.leaf, "width": node.width, "height": node.height}
    return {
        "dir": node.dir,
        "width": node.width,
        "height": node.height,
        "children": [layout_to_json(c) for c in node.children],
    }


def _binding_to_json(binding: Binding) -> dict:
    out = {}
    for key, value in binding.items():
        if isinstance(value, tuple):
            out[key] = list(value)
        elif isinstance(value, list):
            out[key] = [_binding_to_json(b) if isinstance(b, dict) else b for b in value]
        else:
            out[key] = value
    return out


def spec_to_json(spec: InterfaceSpec) -> dict:
    return {
        "version": 1,
        "forest": dt.forest_to_json(spec.forest),
        "visualizations": [
            {
                "id": v.vis_id,
                "chart": v.chart,
                "encodings": v.encodings,
                "tree": v.tree_id,
                "width": v.width,
                "height": v.height,
            }
            for v in spec.visualizations
        ],
        "widgets": [
            {
                "id": w.widget_id,
                "type": w.widget_type,
                "targets": list(w.targets),
                "tree": w.tree_id,
                "options": w.options,
                "range": list(w.value_range) if w.value_range else None,
                "column": w.column,
                "default": _default_to_json(w.default),
                "width": w.width,
                "height": w.height,
            }
            for w in spec.widgets
        ],
        "visInteractions": [
            {
                "id": ix.interaction_id,
                "event": ix.event,
                "source": ix.source_vis,
                "targets": [list(t) for t in ix.targets],
                "columns": list(ix.columns),
                "domains": [list(d) for d in ix.domains],
            }
            for ix in spec.vis_interactions
        ],
        "layout": layout_to_json(spec.layout),
        "defaults": {tid: _binding_to_json(b) for tid, b in spec.defaults.items()},
    }


def _default_to_json(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def canonical_spec_json(spec: InterfaceSpec) -> str:
    return json.dumps(spec_to_json(spec), sort_keys=True, separators=(",", ":"))


# --- re-validation ----------------------------------------------------------------------


def validate_spec(
    spec: InterfaceSpec, catalog: TableCatalog, screen: tuple[int, int]
) -> list[str]:
    """Re-check every InterfaceSpec invariant; returns a list of problems."""
    problems = []
    forest = spec.forest
    facts = _collect_facts(forest)

    vis_by_tree = {v.tree_id: v for v in spec.visualizations}
    if set(vis_by_tree) != {t.tree_id for t in forest.trees} or len(
        spec.visualizations
    ) != len(forest.trees):
        problems.append("visualizations do not map trees one-to-one")
    for vis in spec.visualizations:
        tree = forest.find_tree(vis.tree_id)
        if tree is None:
            problems.append(f"{vis.vis_id}: unknown tree {vis.tree_id}")
            continue
        allowed = {c.chart for c in candidate_visualizations(tree, catalog)}
        if vis.chart not in allowed:
            problems.append(f"{vis.vis_id}: chart {vis.chart} violates schema constraints")

    covered: dict[str, str] = {}
    for widget in spec.widgets:
        for target in widget.targets:
            if target in covered:
                problems.append(f"choice node {target} targeted more than once")
            covered[target] = widget.widget_id
        node = facts.nodes.get(widget.targets[0])
        if node is None:
            problems.append(f"{widget.widget_id}: unknown target {widget.targets[0]}")
            continue
        if widget.widget_type == "range_slider":
            if widget.targets[0] not in facts.pair_members:
                problems.append(f"{widget.widget_id}: range_slider target is not a range pair")
        else:
            allowed_types = {
                w.widget_type
                for w in candidate_widgets(
                    node, catalog, facts.tree_of[node.node_id], facts.contexts.get(node.node_id)
                )
            }
            if widget.widget_type not in allowed_types:
                problems.append(
                    f"{widget.widget_id}: {widget.widget_type} incompatible with node schema"
                )
    for ix in spec.vis_interactions:
        source_tree = next(
            (v.tree_id for v in spec.visualizations if v.vis_id == ix.source_vis), None
        )
        if source_tree is None:
            problems.append(f"{ix.interaction_id}: unknown source {ix.source_vis}")
            continue
        for target in ix.targets:
            for node_id in target:
                if node_id in covered:
                    problems.append(f"choice node {node_id} targeted more than once")
                covered[node_id] = ix.interaction_id
                if ix.event != "pan_zoom" and facts.tree_of.get(node_id) == source_tree:
                    problems.append(
                        f"{ix.interaction_id}: source chart depends on its own target"
                    )
        if ix.event in ("click", "multi_click"):
            node_id = ix.targets[0][0]
            context = facts.contexts.get(node_id)
            node = facts.nodes.get(node_id)
            values = _literal_values(node) if node else None
            if context is None or values is None:
                problems.append(f"{ix.interaction_id}: target is not a literal choice")
            else:
                sample = _domain_sample(catalog, *context)
                if not set(values) <= set(sample):
                    problems.append(f"{ix.interaction_id}: domain containment violated")

    all_choice_ids = set(facts.order)
    if set(covered) != all_choice_ids:
        missing = sorted(all_choice_ids - set(covered))
        if missing:
            problems.append(f"uncovered choice nodes: {missing}")

    paths = leaf_paths(spec.layout)
    expected = {v.vis_id for v in spec.visualizations} | {
        w.widget_id for w in spec.widgets
    }
    if set(paths) != expected:
        problems.append("layout leaves do not match interface components")
    ok, msg = _check_inner_arity(spec.layout)
    if not ok:
        problems.append(msg)

    for tree in forest.trees:
        binding = spec.defaults.get(tree.tree_id)
        if binding is None:
            problems.append(f"tree {tree.tree_id}: missing default binding")
            continue
        try:
            query = dt.bind(tree, binding)
            execute(query, catalog)
        except Exception as exc:  # noqa: BLE001 - collecting all problems
            problems.append(f"tree {tree.tree_id}: default binding fails: {exc}")
    return problems


def _check_inner_arity(node: LayoutNode) -> tuple[bool, str]:
    if node.leaf is not None:
        return True, ""
    if len(node.children) < 2:
        return False, "layout inner node with fewer than 2 children"
    for child in node.children:
        ok, msg = _check_inner_arity(child)
        if not ok:
            return ok, msg
    return True, ""
