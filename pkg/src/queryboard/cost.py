"""Interface cost: manipulation + navigation time plus a layout penalty.

The model walks the input query sequence in order. Expressing the next
query means re-binding the choice nodes whose selections change; each
change costs its interaction's manipulation constant (multi-valued widgets
scale with the number of options toggled). Navigation charges nav_unit per
layout-tree edge walked between consecutively manipulated components,
starting from the layout root. Interfaces larger than the screen pay
overflow_weight per unit of excess area ratio.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Optional

from . import difftree as dt
from .difftree import Binding, DiffForest
from .errors import FormatError, NotExpressiveError
from .mapping import (
    InterfaceSpec,
    WidgetSpec,
    leaf_paths,
    path_length,
    sample_mapping,
)
from .relation import TableCatalog
from .sqlast import Query, render_sql

DEFAULT_MANIPULATION = {
    "button_list": 1.0,
    "radio_list": 1.0,
    "dropdown": 1.5,
    "toggle": 0.5,
    "checkbox_list": 0.8,  # per toggled item
    "slider": 2.0,
    "range_slider": 2.5,
    "click": 1.0,
    "multi_click": 0.8,  # per clicked item
    "brush_x": 2.0,
    "pan_zoom": 2.5,
}

DEFAULT_SCREEN = (1280, 800)


@dataclass
class CostParams:
    manipulation: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MANIPULATION))
    nav_unit: float = 0.1
    overflow_weight: float = 10.0
    screen: tuple[int, int] = DEFAULT_SCREEN

    def to_dict(self) -> dict:
        return {
            "manipulation": dict(self.manipulation),
            "nav_unit": self.nav_unit,
            "overflow_weight": self.overflow_weight,
            "screen": list(self.screen),
        }

    @classmethod
    def from_file(cls, path: str | Path) -> "CostParams":
        """Load key=value overrides; unknown keys are rejected.

        Example lines: `nav_unit=0.2`, `manipulation.slider=3`, `screen=1024x768`.
        """
        params = cls()
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key.startswith("manipulation."):
                name = key.split(".", 1)[1]
                if name not in params.manipulation:
                    raise FormatError(f"{path}:{lineno}: unknown interaction {name!r}")
                params.manipulation[name] = _positive(value, path, lineno)
            elif key == "nav_unit":
                params.nav_unit = _positive(value, path, lineno)
            elif key == "overflow_weight":
                params.overflow_weight = _positive(value, path, lineno)
            elif key == "screen":
                try:
                    w, h = value.lower().split("x")
                    params.screen = (int(w), int(h))
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: screen must look like 1280x800")
            else:
                raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
        return params


def _positive(text: str, path, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: not a number: {text!r}")
    if value <= 0:
        raise FormatError(f"{path}:{lineno}: constants must be strictly positive")
    return value


@dataclass
class CostBreakdown:
    manipulation: float
    navigation: float
    layout_penalty: float
    params: CostParams

    @property
    def total(self) -> float:
        return self.manipulation + self.navigation + self.layout_penalty

    def to_dict(self) -> dict:
        return {
            "manipulation": round(self.manipulation, 9),
            "navigation": round(self.navigation, 9),
            "layout_penalty": round(self.layout_penalty, 9),
            "total": round(self.total, 9),
            "params": self.params.to_dict(),
        }

    def __str__(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _selection_delta(interaction, old, new) -> float:
    """Scale factor for one changed selection (1 except multi-valued widgets)."""
    event = (
        interaction.widget_type
        if isinstance(interaction, WidgetSpec)
        else interaction.event
    )
    if event in ("checkbox_list", "multi_click") and isinstance(new, (list, tuple)):
        old_set = set(old) if isinstance(old, (list, tuple)) else set()
        return max(1, len(old_set.symmetric_difference(set(new))))
    return 1


def _interaction_kind(interaction) -> str:
    if isinstance(interaction, WidgetSpec):
        return interaction.widget_type
    return interaction.event


def _transition_cost(
    spec: InterfaceSpec,
    paths: dict[str, tuple[int, ...]],
    params: CostParams,
    current: Binding,
    witness: Binding,
    cursor: Optional[str],
) -> tuple[float, float, Optional[str], list]:
    """Manipulation + navigation to move one tree's bindings to `witness`."""
    changed = {
        node_id: sel for node_id, sel in witness.items() if current.get(node_id) != sel
    }
    by_interaction: dict[str, tuple[object, list[str]]] = {}
    for node_id in changed:
        interaction = spec.interaction_for(node_id)
        if interaction is None:
            raise NotExpressiveError(f"choice node {node_id} has no interaction")
        key = spec.component_of(interaction) + "::" + _interaction_kind(interaction)
        by_interaction.setdefault(key, (interaction, []))[1].append(node_id)

    manip = 0.0
    nav = 0.0
    steps = []
    for key in sorted(by_interaction):
        interaction, node_ids = by_interaction[key]
        kind = _interaction_kind(interaction)
        unit = params.manipulation[kind]
        scale = max(
            _selection_delta(interaction, current.get(nid), changed[nid])
            for nid in node_ids
        )
        manip += unit * scale
        component = spec.component_of(interaction)
        nav += params.nav_unit * path_length(paths, cursor, component)
        cursor = component
        steps.append((kind, component))
    return manip, nav, cursor, steps


def interface_cost(
    spec: InterfaceSpec,
    queries: list[Query],
    params: Optional[CostParams] = None,
    witness_limit: int = 64,
) -> CostBreakdown:
    """Cost of operating the interface through `queries` in order.

    Raises NotExpressiveError when some query has no witness binding in any
    tree of the forest.
    """
    params = params or CostParams()
    paths = leaf_paths(spec.layout)
    current: dict[str, Binding] = {
        tid: dict(binding) for tid, binding in spec.defaults.items()
    }
    cursor: Optional[str] = None
    manip_total = 0.0
    nav_total = 0.0

    for query in queries:
        best = None
        for tree in spec.forest.trees:
            for witness in dt.witnesses(tree, query, limit=witness_limit):
                manip, nav, new_cursor, _ = _transition_cost(
                    spec, paths, params, current[tree.tree_id], witness, cursor
                )
                key = (manip + nav,)
                if best is None or key < best[0]:
                    best = (key, tree.tree_id, witness, manip, nav, new_cursor)
        if best is None:
            raise NotExpressiveError(render_sql(query))
        _, tree_id, witness, manip, nav, cursor = best
        current[tree_id].update(witness)
        manip_total += manip
        nav_total += nav

    screen_area = params.screen[0] * params.screen[1]
    layout_area = spec.layout.width * spec.layout.height
    penalty = params.overflow_weight * max(0.0, layout_area / screen_area - 1.0)
    return CostBreakdown(manip_total, nav_total, penalty, params)


def state_value(
    state: DiffForest,
    queries: list[Query],
    catalog: TableCatalog,
    screen: tuple[int, int],
    k: int,
    seed: int,
    params: Optional[CostParams] = None,
) -> float:
    """Minimum interface cost over k randomly sampled mappings of a state."""
    if k < 1:
        raise ValueError("k must be at least 1")
    params = params or CostParams(screen=screen)
    rng = Random(seed)
    best = float("inf")
    for _ in range(k):
        sample_seed = rng.randrange(2**32)
        spec = sample_mapping(state, catalog, screen, sample_seed, log=queries)
        cost = interface_cost(spec, queries, params).total
        best = min(best, cost)
    return best
