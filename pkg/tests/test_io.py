import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from extremo.core import DomainError, GridSpec
from extremo.extremogram import ExtremogramEstimate
from extremo.io import (IngestError, frechet_transform, ingest_csv, write_estimates_csv,
                        write_field_csv, write_json)
from extremo.simulate import SpaceTimeField


def write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestIngest:
    def test_single_cell(self, tmp_path):
        f = ingest_csv(write(tmp_path, "i1,i2,t,value\n1,1,1,2.5\n"))
        assert f.grid == GridSpec(1, 1)
        assert f.values[0, 0, 0] == 2.5
        assert f.margin_tag == "raw"

    def test_any_row_order(self, tmp_path):
        text = "i1,i2,t,value\n" + "".join(
            f"{i1},{i2},{t},{i1 * 100 + i2 * 10 + t}\n"
            for t in (2, 1) for i2 in (2, 1) for i1 in (1, 2))
        f = ingest_csv(write(tmp_path, text))
        assert f.values[1, 0, 1] == 212

    @pytest.mark.parametrize("text, msg", [
        ("i1,i2,t,value\n1,1,1,2\n1,1,1,3\n", "duplicate"),
        ("i1,i2,t,value\n1,1,1,2\n2,2,1,3\n", "incomplete"),
        ("i1,i2,t,value\n1,1,1,abc\n", "could not convert"),
        ("i1,i2,t,value\n1,1,1,nan\n", "non-finite"),
        ("a,b,c,d\n1,1,1,2\n", "header"),
        ("i1,i2,t,value\n1,1,1\n", "4 columns"),
        ("i1,i2,t,value\n", "no data"),
        ("i1,i2,t,value\n0,1,1,1.0\n", "start at 1"),
        ("i1,i2,t,value\n1,1,1,1\n1,2,1,1\n", "square"),
    ])
    def test_rejects(self, tmp_path, text, msg):
        with pytest.raises(IngestError, match=msg):
            ingest_csv(write(tmp_path, text))

    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        vals = 1 / rng.exponential(size=(3, 3, 4))
        f = SpaceTimeField(GridSpec(3, 4), vals)
        p = tmp_path / "rt.csv"
        write_field_csv(f, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "i1,i2,t,value"
        assert lines[1].startswith("1,1,1,") and lines[2].startswith("1,1,2,")
        back = ingest_csv(p)
        assert_array_equal(back.values, vals)


class TestFrechet:
    def test_increasing_series(self):
        f = SpaceTimeField(GridSpec(1, 3), np.array([[[1.0, 5.0, 9.0]]]), "raw")
        out = frechet_transform(f)
        assert_allclose(out.values[0, 0], [-1 / math.log(k / 4) for k in (1, 2, 3)])
        assert out.margin_tag == "frechet"

    def test_ties_get_average_rank(self):
        f = SpaceTimeField(GridSpec(1, 3), np.array([[[2.0, 2.0, 7.0]]]), "raw")
        out = frechet_transform(f)
        assert_allclose(out.values[0, 0, :2], -1 / math.log(1.5 / 4))

    def test_uniform_margins(self):
        rng = np.random.default_rng(1)
        f = SpaceTimeField(GridSpec(2, 5000), rng.normal(size=(2, 2, 5000)), "raw")
        out = frechet_transform(f)
        u = np.exp(-1 / out.values[1, 0])
        assert stats.kstest(u, "uniform").statistic <= 1.63 / math.sqrt(5000)

    def test_rejects(self):
        with pytest.raises(DomainError):
            frechet_transform(SpaceTimeField(GridSpec(1, 1), np.ones((1, 1, 1)), "raw"))
        with pytest.raises(DomainError, match="constant"):
            frechet_transform(SpaceTimeField(GridSpec(1, 3), np.ones((1, 1, 3)), "raw"))


class TestWriters:
    def test_estimates_csv(self, tmp_path):
        est = ExtremogramEstimate("spatial", (1.0, 2.0), np.array([0.4, 0.2]), 9.5,
                                  "quantile:0.9", (8, 4), np.array([5, 5]),
                                  True, 3.0, np.array([0.5, 0.3]))
        p = tmp_path / "e.csv"
        write_estimates_csv([est], p)
        rows = p.read_text().splitlines()
        assert rows[0] == "axis,lag,value,corrected_value,slices,threshold"
        assert rows[1] == "spatial,1.0,0.5,0.4,5,9.5"

    def test_json_handles_numpy_and_nan(self, tmp_path):
        p = tmp_path / "x.json"
        write_json({"a": np.float64(0.5), "b": np.arange(2), "c": float("nan"),
                    "d": np.bool_(True)}, p)
        assert json.loads(p.read_text()) == {"a": 0.5, "b": [0, 1], "c": None, "d": True}
