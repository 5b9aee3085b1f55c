import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from stagedlong import (
    MISSING,
    Dataset,
    VariableSchema,
    build_event_tree,
    complete_cases,
    load_dataset,
    load_schema,
    project_margin,
    transform_cumulative_sum,
    transform_difference_outcome,
    with_roles,
)
from stagedlong.errors import ArgumentError, ParseError, ValidationError


def test_load_infers_sorted_categories():
    d = load_dataset(b"V1,V2\nA,N\nA,A\nB,N\n")
    assert d.names == ("V1", "V2")
    assert d.variable("V1").categories == ("A", "B")
    assert d.variable("V2").categories == ("A", "N")
    assert len(d) == 3


def test_empty_cell_is_missing_and_row_kept():
    d = load_dataset(io.StringIO("V1,V2\nA,\nB,N\n"))
    assert d.rows[0] == ("A", MISSING)
    assert len(d) == 2


def test_bom_and_quoting():
    d = load_dataset('﻿V1,V2\n"a,b",x\nc,y\n'.encode())
    assert d.names == ("V1", "V2")
    assert d.variable("V1").categories == ("a,b", "c")


def test_wrong_arity_reports_row():
    with pytest.raises(ParseError, match="row 3"):
        load_dataset(b"V1,V2\nA,B\nA\n")


def test_empty_input_is_parse_error():
    with pytest.raises(ParseError):
        load_dataset(b"")


def test_unknown_category_under_schema(tmp_path):
    schema = tmp_path / "schema.ini"
    schema.write_text("[V1]\ncategories = A, B\n")
    with pytest.raises(ValidationError):
        load_dataset(b"V1\nA\nC\n", load_schema(schema))


def test_schema_file_sets_order_and_roles(tmp_path):
    schema = tmp_path / "schema.ini"
    schema.write_text(
        "[Week1]\ncategories = N, A\nrole = timed-outcome\ntime = 1\n"
    )
    d = load_dataset(b"Week1,Z\nA,x\nN,y\n", load_schema(schema))
    var = d.variable("Week1")
    assert var.categories == ("N", "A")
    assert (var.role, var.time) == ("timed-outcome", 1)
    assert d.variable("Z").categories == ("x", "y")


def test_timed_role_requires_time():
    with pytest.raises(ValidationError):
        VariableSchema("Y", ("a", "b"), role="timed-outcome")


def test_depression_dataset(depression):
    assert len(depression) == 340
    assert depression.names == ("Treatment", "Diagnosis", "Week1", "Week2", "Week4")
    covariates = {(r[0], r[1]) for r in depression.rows}
    assert len(covariates) == 4
    assert all(v is not MISSING for r in depression.rows for v in r)


def test_projection_full_schema_is_identity(depression):
    assert project_margin(depression, depression.names) == depression


def test_projection_unknown_variable(depression):
    with pytest.raises(ArgumentError):
        project_margin(depression, ["Treatment", "Nope"])


def test_projection_margin_tree_shape(depression):
    m = project_margin(depression, ["Treatment", "Diagnosis", "Week2"])
    tree = build_event_tree(m, m.names)
    assert len(tree.leaves) == 8


def test_projection_counts_sum_over_dropped_variable(rng):
    from conftest import random_dataset

    for _ in range(20):
        d = random_dataset(rng, 3, n_rows=60)
        full = build_event_tree(d, d.names)
        proj = build_event_tree(project_margin(d, d.names[:2]), d.names[:2])
        for s in proj.situations:
            assert proj.counts[s] == full.counts[s]
        for s in full.level(2):
            par, k = full.parent(s)
            assert full.sample_size(s) == full.counts[par][k]


def test_difference_outcome():
    d = Dataset(
        (VariableSchema("I1", ("2", "3", "5")), VariableSchema("I2", ("3", "4"))),
        (("2", "3"), ("3", "3"), ("5", "4"), (None, "4")),
    )
    out = transform_difference_outcome(d, ["I1", "I2"], [(1, 2)])
    assert out.column("Y1_2") == ("increasing", "decreasing", "decreasing", MISSING)
    base = transform_difference_outcome(d, ["I1", "I2"], [(0, 1)], names=["D"])
    assert base.column("D") == ("increasing", "increasing", "increasing", MISSING)


def test_difference_outcome_rejects_non_integer():
    d = Dataset((VariableSchema("I1", ("a", "b")), VariableSchema("I2", ("1", "2"))), ())
    with pytest.raises(ValidationError):
        transform_difference_outcome(d, ["I1", "I2"], [(1, 2)])


def test_cumulative_sum():
    cats = ("Adequate", "Inadequate")
    d = Dataset(
        tuple(VariableSchema(f"H{t}", cats) for t in range(1, 5)),
        (
            ("Inadequate", "Adequate", "Inadequate", "Adequate"),
            ("Adequate",) * 4,
            ("Adequate", None, "Inadequate", "Adequate"),
        ),
    )
    out = transform_cumulative_sum(d, ["H1", "H2", "H3", "H4"], "Inadequate")
    cols = [out.column(f"Hsum{t}") for t in range(1, 5)]
    assert [c[0] for c in cols] == ["1", "1", "2", "2"]
    assert [c[1] for c in cols] == ["0", "0", "0", "0"]
    assert [c[2] for c in cols] == ["0", MISSING, MISSING, MISSING]
    assert out.variable("Hsum3").categories == ("0", "1", "2", "3")


def test_cumulative_sum_rejects_non_binary():
    d = Dataset((VariableSchema("H", ("a", "b", "c")),), ())
    with pytest.raises(ValidationError):
        transform_cumulative_sum(d, ["H"], "a")


def test_transforms_are_deterministic(depression):
    a = transform_cumulative_sum(depression, ["Week1", "Week2", "Week4"], "N")
    b = transform_cumulative_sum(depression, ["Week1", "Week2", "Week4"], "N")
    assert a == b


def test_complete_cases_and_roles():
    d = load_dataset(b"A,B\nx,y\nx,\n")
    assert len(complete_cases(d)) == 1
    r = with_roles(d, {"B": ("timed-outcome", 1)})
    assert r.variable("B").role == "timed-outcome"


@settings(max_examples=50, deadline=None)
@given(hs.lists(hs.tuples(hs.sampled_from("ab"), hs.sampled_from(["x", "y", ""])), min_size=1, max_size=30))
def test_root_total_counts_rows(rows):
    schema = (VariableSchema("P", ("a", "b")), VariableSchema("Q", ("x", "y")))
    d = Dataset(schema, tuple((a, b or MISSING) for a, b in rows))
    tree = build_event_tree(d, ["P", "Q"])
    assert tree.sample_size(0) == len(rows)
    assert sum(tree.sample_size(s) for s in tree.level(1)) == sum(b != "" for _, b in rows)
