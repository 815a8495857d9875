# Copyright 2026 The mbias-twoplate Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import json

import pytest

from causal.model import ContingencyTable, ancestral_sample_array
from datastores import files
from lib.constants import M_GRAPH_PATH, TABLE1_COUNTS, TABLE1_PATH
from lib.errors import GraphInputError, TableFormatError


def _write(tmp_path, text, name="table.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_read_bundled_table():
    tab = files.read_table(TABLE1_PATH)
    assert tab.total == 627
    assert tab.count(1, 1, 1) == 240
    assert tab == ContingencyTable.from_cells(TABLE1_COUNTS)


def test_write_table_reproduces_bundled_file(tmp_path):
    path = files.write_table(files.read_table(TABLE1_PATH), str(tmp_path / "table.csv"))
    with open(TABLE1_PATH, "rb") as fh:
        assert (tmp_path / "table.csv").read_bytes() == fh.read()
    assert files.read_table(path) == files.read_table(TABLE1_PATH)


def test_read_table_missing_cells_count_zero(tmp_path):
    tab = files.read_table(_write(tmp_path, "T,Z,Y,N\n1,0,1,7\n"))
    assert tab.total == 7
    assert tab.count(1, 0, 1) == 7
    assert files.read_table(_write(tmp_path, "T,Z,Y,N\n")) == ContingencyTable.empty()


@pytest.mark.parametrize(
    "text, message",
    [
        ("A,B,C,D\n0,0,0,1\n", "header"),
        ("", "empty"),
        ("T,Z,Y,N\n0,0,2,1\n", ":2: T, Z and Y"),
        ("T,Z,Y,N\n0,0,0,-1\n", "non-negative"),
        ("T,Z,Y,N\n0,0,0,1.5\n", "integers"),
        ("T,Z,Y,N\n0,0,0,x\n", "integers"),
        ("T,Z,Y,N\n0,0,0,1\n1,1,1,1\n0,0,0,2\n", ":4: cell T=0,Z=0,Y=0 appears twice"),
    ],
)
def test_read_table_format_errors(tmp_path, text, message):
    path = _write(tmp_path, text)
    with pytest.raises(TableFormatError, match=message) as excinfo:
        files.read_table(path)
    assert path in str(excinfo.value)


def test_read_table_missing_file(tmp_path):
    with pytest.raises(OSError, match="missing.csv"):
        files.read_table(str(tmp_path / "missing.csv"))


def test_write_records(tmp_path, biased_params):
    records = ancestral_sample_array(biased_params, 5, seed=1)
    path = files.write_records(records, str(tmp_path / "records.csv"))
    lines = (tmp_path / "records.csv").read_text().splitlines()
    assert path.endswith("records.csv")
    assert lines[0] == "U,W,Z,T,Y"
    assert len(lines) == 6
    assert all(set(line.split(",")) <= {"0", "1"} for line in lines[1:])


def test_params_round_trip(tmp_path, biased_params):
    path = files.write_params(biased_params, str(tmp_path / "params.json"))
    assert files.read_params(path) == biased_params
    assert json.loads((tmp_path / "params.json").read_text())["y_t1_w1"] == 0.9


@pytest.mark.parametrize(
    "text, message",
    [
        ("{not json", "invalid JSON"),
        ("[1, 2]", "JSON object"),
        ('{"p_u": 0.5}', "missing keys"),
    ],
)
def test_read_params_errors(tmp_path, text, message):
    with pytest.raises(TableFormatError, match=message):
        files.read_params(_write(tmp_path, text, "params.json"))


def test_read_params_out_of_range(tmp_path, biased_params):
    flat = biased_params.to_flat()
    flat["p_u"] = 1.5
    path = _write(tmp_path, json.dumps(flat), "params.json")
    with pytest.raises(TableFormatError, match="invalid value"):
        files.read_params(path)


def test_graph_files(tmp_path):
    g = files.read_graph(M_GRAPH_PATH)
    assert set(g.nodes) == {"U", "W", "Z", "T", "Y"}
    path = files.write_graph(g, str(tmp_path / "g.edges"), header="copy")
    assert (tmp_path / "g.edges").read_text().startswith("# copy\n")
    assert files.read_graph(path) == g


def test_read_graph_cycle(tmp_path):
    with pytest.raises(GraphInputError):
        files.read_graph(_write(tmp_path, "A B\nB A\n", "cycle.edges"))


def test_write_json_is_stable(tmp_path):
    first = files.write_json({"b": 1, "a": [0.5, 2]}, str(tmp_path / "one.json"))
    second = files.write_json({"a": [0.5, 2], "b": 1}, str(tmp_path / "two.json"))
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()
    assert (tmp_path / "one.json").read_text().endswith("}\n")
    assert files.read_json(first) == files.read_json(second) == {"a": [0.5, 2], "b": 1}
    with pytest.raises(ValueError):
        files.write_json({"a": float("nan")}, str(tmp_path / "nan.json"))
