

from queryboard.cost import CostParams, interface_cost
from queryboard.difftree import ChoiceKind, initial_forest, merge_asts
from queryboard.mapping import (
    assign_layout,
    best_mapping,
    candidate_pan_zoom,
    candidate_vis_interactions,
    candidate_visualizations,
    candidate_widgets,
    canonical_spec_json,
    detect_range_pairs,
    literal_contexts,
    sample_mapping,
    validate_spec,
)
from queryboard.relation import TableCatalog, build_table
from queryboard.sqlast import parse_query
from queryboard.transforms import applicable_actions, apply_action

from conftest import SCREEN


def _advance(state, kind, times=1):
    for _ in range(times):
        actions = [a for a in applicable_actions(state) if a.kind == kind]
        state = apply_action(state, actions[0])
    return state


def fig5_state(multiview_queries, catalog):
    state = initial_forest(multiview_queries, catalog)
    state = _advance(state, "cluster")
    state = _advance(state, "split")
    state = _advance(state, "pushdown", 2)
    return state


# --- visualization candidates -------------------------------------------


def test_low_card_num_pair_maps_to_bar(catalog, running_queries):
    tree = merge_asts(running_queries, catalog)
    charts = [v.chart for v in candidate_visualizations(tree, catalog)]
    assert charts == ["bar", "table"]


def test_high_card_nums_map_to_line_scatter(sdss_catalog):
    tree = merge_asts([parse_query("SELECT ra, dec FROM stars")], sdss_catalog)
    charts = [v.chart for v in candidate_visualizations(tree, sdss_catalog)]
    assert charts == ["line", "scatter", "table"]


def test_str_pair_maps_to_table_only():
    catalog = TableCatalog()
    catalog.tables["T"] = build_table("T", ["s", "u"], [["a", "b"], ["c", "d"]])
    tree = merge_asts([parse_query("SELECT s, u FROM T")], catalog)
    charts = [v.chart for v in candidate_visualizations(tree, catalog)]
    assert charts == ["table"]


# --- widget candidates ----------------------------------------------------


def test_any_ast_widgets(catalog, running_queries):
    tree = merge_asts(running_queries, catalog)
    node = tree.choice_nodes()[0]
    types = [w.widget_type for w in candidate_widgets(node, catalog, tree.tree_id)]
    assert types == ["button_list", "radio_list", "dropdown"]


def test_literal_any_gains_slider(catalog, multiview_queries):
    state = fig5_state(multiview_queries, catalog)
    tree = state.trees[0]
    node = tree.choice_nodes()[0]
    context = literal_contexts(tree)[node.node_id]
    assert context == ("T", "a")
    types = [w.widget_type for w in candidate_widgets(node, catalog, tree.tree_id, context)]
    assert types == ["button_list", "radio_list", "dropdown", "slider"]
    slider = [w for w in candidate_widgets(node, catalog, tree.tree_id, context) if w.widget_type == "slider"][0]
    assert slider.value_range[0] == 1 and slider.value_range[1] == 3


def test_opt_maps_to_toggle(catalog):
    queries = [
        parse_query("SELECT a, count(*) FROM T GROUP BY a"),
        parse_query("SELECT a, count(*) FROM T WHERE b = 4 GROUP BY a"),
    ]
    state = initial_forest(queries, catalog)
    state = _advance(state, "pushdown")
    tree = state.trees[0]
    opt = [c for c in tree.choice_nodes() if c.kind is ChoiceKind.OPT][0]
    types = [w.widget_type for w in candidate_widgets(opt, catalog, tree.tree_id)]
    assert types == ["toggle"]


def test_widget_options_carry_fragment_labels(catalog, running_queries):
    tree = merge_asts(running_queries, catalog)
    node = tree.choice_nodes()[0]
    widget = candidate_widgets(node, catalog, tree.tree_id)[0]
    assert len(widget.options) == 3
    assert widget.options[0]["label"].startswith("SELECT p")


# --- vis interactions -------------------------------------------------------


def test_click_candidate_on_other_tree(catalog, multiview_queries):
    state = fig5_state(multiview_queries, catalog)
    t1, t2 = state.trees
    node = t1.choice_nodes()[0]
    vis = {t.tree_id: candidate_visualizations(t, catalog)[0] for t in state.trees}
    clicks = candidate_vis_interactions(
        node, t1.tree_id, state, catalog, vis, literal_contexts(t1)[node.node_id]
    )
    assert [c.event for c in clicks] == ["click"]
    assert clicks[0].source_vis == f"vis-{t2.tree_id}"
    assert clicks[0].domains == ((1, 2),)


def test_no_click_without_other_vis(catalog, multiview_queries):
    state = fig5_state(multiview_queries, catalog)
    t1 = state.trees[0]
    node = t1.choice_nodes()[0]
    vis = {t1.tree_id: candidate_visualizations(t1, catalog)[0]}
    clicks = candidate_vis_interactions(
        node, t1.tree_id, state, catalog, vis, literal_contexts(t1)[node.node_id]
    )
    assert clicks == []


def test_pan_zoom_on_own_scatter(sdss_catalog, sdss_queries):
    state = initial_forest(sdss_queries, sdss_catalog)
    while any(a.kind == "pushdown" for a in applicable_actions(state)):
        state = _advance(state, "pushdown")
    tree = state.trees[0]
    pairs = detect_range_pairs(tree)
    assert [(p.column) for p in pairs] == ["ra", "dec"]
    scatter = [v for v in candidate_visualizations(tree, sdss_catalog) if v.chart == "scatter"][0]
    pz = candidate_pan_zoom(pairs[0], pairs[1], state, sdss_catalog, {tree.tree_id: scatter})
    assert len(pz) == 1
    assert pz[0].targets == ((pairs[0].lo_id, pairs[0].hi_id), (pairs[1].lo_id, pairs[1].hi_id))
    assert pz[0].columns == (0, 1)


# --- layout ---------------------------------------------------------------------


def test_layout_chart_above_buttons():
    layout = assign_layout([("chart", 320, 240), ("buttons", 160, 72)], SCREEN)
    assert layout.dir == "v"
    assert [c.leaf for c in layout.children] == ["chart", "buttons"]
    assert (layout.width, layout.height) == (320, 312)


def test_layout_single_chart_is_leaf():
    layout = assign_layout([("chart", 320, 240)], SCREEN)
    assert layout.leaf == "chart"


def test_layout_prefers_vertical_when_too_wide():
    layout = assign_layout([("c1", 400, 240), ("c2", 400, 240)], (500, 2000))
    assert layout.dir == "v"
    assert layout.width == 400


# --- sampling and search ------------------------------------------------------------


def test_sample_deterministic_per_seed(catalog, running_queries):
    state = initial_forest(running_queries, catalog)
    a = sample_mapping(state, catalog, SCREEN, seed=11, log=running_queries)
    b = sample_mapping(state, catalog, SCREEN, seed=11, log=running_queries)
    assert canonical_spec_json(a) == canonical_spec_json(b)


def test_sampled_specs_revalidate(catalog, running_queries):
    state = initial_forest(running_queries, catalog)
    for seed in range(200):
        spec = sample_mapping(state, catalog, SCREEN, seed=seed, log=running_queries)
        assert validate_spec(spec, catalog, SCREEN) == []


def test_static_tree_samples_without_interactions(catalog):
    state = initial_forest([parse_query("SELECT a FROM T")], catalog)
    spec = sample_mapping(state, catalog, SCREEN, seed=0)
    assert spec.widgets == [] and spec.vis_interactions == []
    assert validate_spec(spec, catalog, SCREEN) == []


def test_running_example_maps_root_to_single_select(catalog, running_queries):
    state = initial_forest(running_queries, catalog)
    seen = set()
    for seed in range(30):
        spec = sample_mapping(state, catalog, SCREEN, seed=seed, log=running_queries)
        seen.update(w.widget_type for w in spec.widgets)
    assert {"button_list", "radio_list"} <= seen


def test_best_mapping_single_static_tree(catalog):
    state = initial_forest([parse_query("SELECT p, count(*) FROM T GROUP BY p")], catalog)
    params = CostParams()
    spec = best_mapping(
        state, catalog, SCREEN, lambda s: interface_cost(s, [], params).total
    )
    assert spec.visualizations[0].chart == "bar"
    assert validate_spec(spec, catalog, SCREEN) == []


def test_best_mapping_fig5_prefers_click(catalog, multiview_queries):
    state = fig5_state(multiview_queries, catalog)
    params = CostParams()
    spec = best_mapping(
        state,
        catalog,
        SCREEN,
        lambda s: interface_cost(s, multiview_queries, params).total,
        log=multiview_queries,
    )
    assert [ix.event for ix in spec.vis_interactions] == ["click"]
    assert spec.widgets == []
    source_tree = [v.tree_id for v in spec.visualizations if v.vis_id == spec.vis_interactions[0].source_vis]
    assert source_tree == [state.trees[1].tree_id]


def test_beam_beats_random_sampling():
    """Mapping space past the complete-search cap: the beam result must not
    lose to the best of 1000 random samples."""
    catalog = TableCatalog()
    rows_r1 = [[str(i % 5), str(i % 7)] for i in range(30)]
    catalog.tables["R1"] = build_table("R1", ["u", "v"], rows_r1)
    catalog.tables["R2"] = build_table("R2", ["u", "v", "w"], [r + [str(i % 3)] for i, r in enumerate(rows_r1)])
    catalog.tables["R3"] = build_table("R3", ["u", "v"], rows_r1)
    logs = []
    for table, cols in [("R1", "u, v"), ("R2", "u, v, w"), ("R3", "u")]:
        logs.append(f"SELECT {cols} FROM {table} WHERE u >= 1 AND u <= 4 AND v >= 2 AND v <= 6")
        logs.append(f"SELECT {cols} FROM {table} WHERE u >= 0 AND u <= 3 AND v >= 1 AND v <= 5")
    queries = [parse_query(q) for q in logs]
    state = initial_forest(queries, catalog)
    while any(a.kind == "pushdown" for a in applicable_actions(state)):
        state = _advance(state, "pushdown")
    n_choices = sum(len(t.choice_nodes()) for t in state.trees)
    assert n_choices == 12
    params = CostParams()
    cost_fn = lambda s: interface_cost(s, queries, params).total
    beam_spec = best_mapping(state, catalog, SCREEN, cost_fn, log=queries)
    beam_cost = cost_fn(beam_spec)
    sampled_best = min(
        cost_fn(sample_mapping(state, catalog, SCREEN, seed=s, log=queries))
        for s in range(1000)
    )
    assert beam_cost <= sampled_best


def test_subset_checkbox_and_multi_click(catalog):
    """Hand-built IN-list subset: checkbox widget plus a multi-click
    candidate sourced from another tree's chart over the same column."""
    from queryboard.difftree import Choice, ChoiceKind, DiffForest, DiffTree, Static
    from queryboard.mapping import literal_contexts

    lit = lambda v: Static(("lit", "num", v))
    subset_root = Static(
        ("query",),
        (
            Static(("select",), (Static(("item", None), (Static(("col", None, "p")),)),)),
            Static(("from", "T")),
            Static(
                ("inlist",),
                (Static(("col", None, "a")), Choice(ChoiceKind.SUBSET, (lit(1), lit(2)), "s0")),
            ),
            Static(("groupby",), ()),
            Static(("orderby",), ()),
            Static(("nothing",)),
        ),
    )
    subset_tree = DiffTree("t0", subset_root)
    other = merge_asts([parse_query("SELECT a, count(*) FROM T GROUP BY a")], catalog, tree_id="t1")
    forest = DiffForest((subset_tree, other), next_node_id=1, next_tree_id=2)

    node = subset_tree.choice_nodes()[0]
    context = literal_contexts(subset_tree)[node.node_id]
    widgets = candidate_widgets(node, catalog, "t0", context)
    assert [w.widget_type for w in widgets] == ["checkbox_list"]
    assert len(widgets[0].options) == 2

    vis = {t.tree_id: candidate_visualizations(t, catalog)[0] for t in forest.trees}
    clicks = candidate_vis_interactions(node, "t0", forest, catalog, vis, context)
    assert [c.event for c in clicks] == ["multi_click"]

    spec = sample_mapping(forest, catalog, SCREEN, seed=0)
    assert validate_spec(spec, catalog, SCREEN) == []


def test_multi_widget_repetition_counts(catalog):
    from queryboard.difftree import Choice, ChoiceKind, Static

    item = Static(("item", None), (Static(("col", None, "a")),))
    node = Choice(ChoiceKind.MULTI, (item,), "m0")
    widgets = candidate_widgets(node, catalog, "t0")
    assert [w.widget_type for w in widgets] == ["button_list"]
    assert [len(o["binding"]) for o in widgets[0].options] == [1, 2, 3]


def test_brush_candidate_overview_detail(catalog):
    """Overview chart plus a detail tree with a date-range pair: a brush on
    the overview's x axis binds the pair."""
    from queryboard.mapping import candidate_brushes
    from queryboard.relation import TableCatalog, build_table

    cat = TableCatalog()
    rows = [[str(d), str((d * 7) % 50 + 1)] for d in range(1, 51)]
    cat.tables["covid"] = build_table("covid", ["day", "cases"], rows)
    queries = [
        parse_query("SELECT day, cases FROM covid"),
        parse_query("SELECT day, cases FROM covid WHERE day BETWEEN 10 AND 20"),
        parse_query("SELECT day, cases FROM covid WHERE day BETWEEN 30 AND 40"),
    ]
    state = initial_forest(queries, cat)
    state = _advance(state, "cluster")
    state = _advance(state, "split")
    while any(a.kind == "pushdown" for a in applicable_actions(state)):
        state = _advance(state, "pushdown")
    overview, detail = state.trees  # the where-free query groups first
    pairs = detect_range_pairs(detail)
    assert [p.column for p in pairs] == ["day"]
    vis = {t.tree_id: candidate_visualizations(t, cat)[0] for t in state.trees}
    assert vis[overview.tree_id].chart == "line"
    brushes = candidate_brushes(pairs[0], detail.tree_id, state, cat, vis)
    assert [b.event for b in brushes] == ["brush_x"]
    assert brushes[0].source_vis == f"vis-{overview.tree_id}"
    assert brushes[0].targets == ((pairs[0].lo_id, pairs[0].hi_id),)
