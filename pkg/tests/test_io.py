import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trisig.exceptions import DomainMismatchError, ParseError
from trisig.io import (
    dumps_csv,
    read_csv,
    read_tensor,
    read_triclusters,
    tensor_from_json,
    tensor_to_json,
    triclusters_from_json,
    triclusters_to_json,
    write_tensor,
    write_triclusters,
)
from trisig.tensor import Pattern, Tensor3, Tricluster, VariableDomain, from_codes


def test_csv_round_trip_with_sidecar(tmp_path, hand_tensor):
    path = tmp_path / "t.csv"
    write_tensor(hand_tensor, path)
    assert (tmp_path / "t.csv.meta.json").exists()
    back = read_tensor(path)
    assert back == hand_tensor
    assert back.temporal


def test_csv_keeps_axis_labels_without_cells(tmp_path):
    codes = np.array([[[0, -1]], [[-1, -1]]])
    t = from_codes(codes, 2, obs_labels=["a", "b"], ctx_labels=["t0", "t1"])
    path = tmp_path / "sparse.csv"
    write_tensor(t, path)
    back = read_tensor(path)
    assert back.obs_labels == ("a", "b") and back.shape == (2, 1, 2)
    assert np.isnan(back.values[1]).all()


def test_csv_inference_without_metadata():
    text = "obs,var,ctx,value\nx0,g1,t0,2\nx0,g2,t0,0.5\nx1,g1,t0,10\nx1,g2,t1,1.5\n"
    t = read_csv(io.StringIO(text))
    assert t.shape == (2, 2, 2)
    g1, g2 = t.domains
    assert g1.is_ordinal and g1.categories == ("2", "10")
    assert not g2.is_ordinal
    assert t.values[1, 0, 0] == 1  # "10" is the second category numerically
    assert np.isnan(t.values[0, 1, 1])


def test_csv_kind_override():
    text = "obs,var,ctx,value\na,v,c,1\nb,v,c,3\n"
    assert not read_csv(io.StringIO(text), kind="real").domains[0].is_ordinal
    assert read_csv(io.StringIO(text), temporal=True).temporal


@pytest.mark.parametrize(
    "text, locus",
    [
        ("obs,var,value\n", "line 1"),
        ("obs,var,ctx,value\na,b,c\n", "line 2"),
        ("obs,var,ctx,value\na,b,c,1\na,b,c,2\n", "line 3"),
        ("", "line 1"),
    ],
)
def test_csv_parse_errors(text, locus):
    with pytest.raises(ParseError) as exc:
        read_csv(io.StringIO(text))
    assert exc.value.locus == locus


def test_csv_domain_mismatch_against_metadata(tmp_path, hand_tensor):
    path = tmp_path / "t.csv"
    write_tensor(hand_tensor, path)
    path.write_text(path.read_text().replace("x0,y0,z0,0", "x0,y0,z0,7"))
    with pytest.raises(DomainMismatchError, match="line 2"):
        read_tensor(path)


def test_json_round_trip(tmp_path, hand_tensor):
    path = tmp_path / "t.json"
    write_tensor(hand_tensor, path)
    assert read_tensor(path) == hand_tensor


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=8))
def test_real_values_round_trip_losslessly(xs):
    t = Tensor3(np.array(xs, dtype=float).reshape(len(xs), 1, 1))
    assert tensor_from_json(json.loads(json.dumps(tensor_to_json(t)))) == t
    back = read_csv(io.StringIO(dumps_csv(t)), kind="real")
    assert np.array_equal(back.values, t.values)


def test_json_errors():
    with pytest.raises(ParseError):
        tensor_from_json({"obs": ["a"], "vars": ["v"]})
    with pytest.raises(ParseError, match="cells\\[0\\]"):
        tensor_from_json({"obs": ["a"], "vars": ["v"], "ctxs": ["c"], "cells": [[0, 5, 0, 1]]})
    with pytest.raises(ParseError):
        read_triclusters(io.StringIO("{not json"))


def test_triclusters_by_index_and_label(hand_tensor):
    doc = {
        "triclusters": [
            {"id": "a", "I": [1, 0], "J": [0], "K": [0, 1], "contiguous": True},
            {"I": ["x2", "x3"], "J": ["y1"], "K": ["z2"]},
        ]
    }
    (id0, tc0, p0), (id1, tc1, _) = triclusters_from_json(doc, hand_tensor)
    assert id0 == "a" and tc0 == Tricluster([0, 1], [0], [0, 1], contiguous=True) and p0 is None
    assert id1 == 1 and tc1.obs_idx == (2, 3) and tc1.var_idx == (1,)


@pytest.mark.parametrize(
    "entry",
    [{"I": [0]}, {"I": [9], "J": [0], "K": [0]}, {"I": ["nobody"], "J": [0], "K": [0]}, {"I": [0], "J": [0], "K": [0, 2], "contiguous": True}],
)
def test_tricluster_errors(hand_tensor, entry):
    with pytest.raises(ParseError, match="triclusters\\[0\\]"):
        triclusters_from_json({"triclusters": [entry]}, hand_tensor)


def test_manifest_round_trip(hand_tensor):
    tc = Tricluster([0, 1], [0, 1], [0, 1])
    pat = Pattern(tc.var_idx, tc.ctx_idx, np.array([[0, 0], [1, 1]]))
    buf = io.StringIO()
    write_triclusters([tc], buf, hand_tensor, [pat], labels=True)
    buf.seek(0)
    [(_, back, back_pat)] = read_triclusters(buf, hand_tensor)
    assert back == tc and back_pat == pat
    assert triclusters_to_json([tc])["triclusters"][0]["I"] == [0, 1]


def test_manifest_pattern_uses_labels():
    t = Tensor3(np.array([[[1.0]]]), (VariableDomain.ordinal(["lo", "hi"]),))
    doc = {"triclusters": [{"I": [0], "J": [0], "K": [0], "pattern": [["hi"]]}]}
    assert triclusters_from_json(doc, t)[0][2].values.tolist() == [[1]]
    doc["triclusters"][0]["pattern"] = [["hi", "lo"]]
    with pytest.raises(ParseError):
        triclusters_from_json(doc, t)
