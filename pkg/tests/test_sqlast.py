from random import Random

import pytest

from queryboard.errors import SqlSyntaxError, TypeMismatchError, UnsupportedFeatureError
from queryboard.sqlast import (
    Cmp,
    ColumnRef,
    Literal,
    infer_result_schema,
    parse_log,
    parse_query,
    render_sql,
)
from queryboard.relation import ColumnType

from reference import random_catalog, random_query


def test_parse_running_example_q1():
    q = parse_query("SELECT p, count(*) FROM T WHERE a=1 GROUP BY p")
    assert q.table == "T"
    assert q.where == Cmp("=", ColumnRef("a"), Literal(ColumnType.NUM, 1))
    assert [i.expr for i in q.select][1].fn == "count"
    assert q.group_by == (ColumnRef("p"),)


def test_parse_projection_change():
    q = parse_query("SELECT a, count(*) FROM T GROUP BY a")
    assert q.select[0].expr == ColumnRef("a")
    assert q.where is None


def test_join_unsupported():
    with pytest.raises(UnsupportedFeatureError):
        parse_query("SELECT * FROM A JOIN B")


def test_subquery_and_having_unsupported():
    with pytest.raises(UnsupportedFeatureError):
        parse_query("SELECT a FROM T HAVING a > 1")
    with pytest.raises(UnsupportedFeatureError):
        parse_query("SELECT a FROM (SELECT a FROM T)")


def test_syntax_error_carries_position():
    with pytest.raises(SqlSyntaxError) as err:
        parse_query("SELECT FROM T")
    assert err.value.line == 1
    assert err.value.column > 0


def test_keywords_case_insensitive():
    a = parse_query("select p from T where a = 1")
    b = parse_query("SELECT p FROM T WHERE a = 1")
    assert a == b


def test_render_round_trip_examples():
    for sql in [
        "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p",
        "SELECT a FROM T WHERE a BETWEEN 1 AND 5",
        "SELECT p FROM T WHERE p IN (1, 2)",
        "SELECT p FROM T WHERE a = 1 AND b = 2 OR p = 3",
        "SELECT p FROM T WHERE (a = 1 OR b = 2) AND p = 3",
        "SELECT p AS q, sum(a) AS total FROM T GROUP BY p ORDER BY q DESC LIMIT 3",
        "SELECT s FROM U WHERE s = 'it''s'",
    ]:
        ast = parse_query(sql)
        assert parse_query(render_sql(ast)) == ast


def test_render_between_and_inlist_shapes():
    q = parse_query("select a from T where a between 1 and 5")
    assert "a BETWEEN 1 AND 5" in render_sql(q)
    q = parse_query("select p from T where p in (1,2)")
    assert "p IN (1, 2)" in render_sql(q)


def test_between_bounds_order_enforced():
    with pytest.raises(SqlSyntaxError):
        parse_query("SELECT a FROM T WHERE a BETWEEN 5 AND 1")


def test_alias_equal_to_default_name_is_dropped():
    assert parse_query("SELECT p AS p FROM T") == parse_query("SELECT p FROM T")
    assert parse_query("SELECT count(*) AS count FROM T") == parse_query(
        "SELECT count(*) FROM T"
    )


def test_group_by_select_validation():
    with pytest.raises(SqlSyntaxError):
        parse_query("SELECT p, a FROM T GROUP BY p")
    with pytest.raises(SqlSyntaxError):
        parse_query("SELECT p, count(*) FROM T")


def test_parse_log_lines_and_semicolons():
    text = "-- comment\nSELECT p FROM T\nSELECT a FROM T\n"
    assert [t for t, _ in parse_log(text)] == ["SELECT p FROM T", "SELECT a FROM T"]
    text2 = "SELECT p FROM T;\nSELECT a\nFROM T;"
    assert len(parse_log(text2)) == 2


def test_infer_schema_running_example(tiny_catalog):
    q1 = parse_query("SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p")
    assert str(infer_result_schema(q1, tiny_catalog)) == "<p:num,count:num>"
    q3 = parse_query("SELECT a, count(*) FROM T GROUP BY a")
    assert str(infer_result_schema(q3, tiny_catalog)) == "<a:num,count:num>"


def test_infer_schema_str_passthrough(catalog):
    # the demo dataset has no str column; build one inline
    from queryboard.relation import TableCatalog, build_table

    cat = TableCatalog()
    cat.tables["T"] = build_table("T", ["name"], [["x"], ["y"]])
    schema = infer_result_schema(parse_query("SELECT name FROM T"), cat)
    assert str(schema) == "<name:str>"


def test_sum_over_str_rejected():
    from queryboard.relation import TableCatalog, build_table

    cat = TableCatalog()
    cat.tables["T"] = build_table("T", ["name"], [["x"]])
    with pytest.raises(TypeMismatchError):
        infer_result_schema(parse_query("SELECT sum(name) FROM T"), cat)


def test_round_trip_random_queries():
    rng = Random(1234)
    catalog = random_catalog(rng)
    for _ in range(200):
        query = random_query(rng, catalog)
        rendered = render_sql(query)
        assert parse_query(rendered) == query, rendered


def test_schema_matches_executor_types(tiny_catalog):
    from queryboard.executor import execute

    rng = Random(99)
    catalog = random_catalog(rng)
    for _ in range(50):
        query = random_query(rng, catalog)
        schema = infer_result_schema(query, catalog)
        result = execute(query, catalog)
        assert [t for _, t in schema.columns] == [t for _, t in result.columns]
