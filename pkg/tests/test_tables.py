import csv

import pytest

from lrdesign import reference_tables as ref
from lrdesign.design_core import Grid, quadrature
from lrdesign.tables import TABLE_IDS, build_table, maximin_approximation


@pytest.fixture(scope="module")
def tables():
    return {i: build_table(i) for i in TABLE_IDS}


@pytest.mark.parametrize("table_id", TABLE_IDS)
def test_table_within_tolerance(tables, table_id):
    res = tables[table_id]
    bad = [(c.row, c.column, c.computed, c.reference) for c in res.cells if not c.ok]
    assert not bad
    assert res.ok


def test_cell_counts(tables):
    assert [len(tables[i].cells) for i in TABLE_IDS] == [20, 9, 20, 25, 25]


def test_csv_outputs(tables, tmp_path):
    res = tables[3]
    res.write_csv(tmp_path / "t.csv")
    res.write_diff(tmp_path / "d.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["lambda", "gamma", "mu", "tau", "edge", "eff_uni"] and len(rows) == 6
    diff = list(csv.DictReader(open(tmp_path / "d.csv")))
    assert len(diff) == 20 and all(r["ok"] == "1" for r in diff)
    assert float(diff[0]["reference"]) == ref.TABLE3[0][2]


def test_approximation_density_normalised():
    g = Grid(1.0, 2001)
    d = maximin_approximation(g)
    assert quadrature(d.values, g) == pytest.approx(1.0, abs=1e-12)
    assert d.values[1000] == 0.0 and d.values[0] > 0


def test_unknown_table():
    with pytest.raises(KeyError):
        build_table(6)
