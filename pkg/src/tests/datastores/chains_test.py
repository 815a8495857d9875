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
import numpy as np
import pytest

from datastores import chains
from inference.analysis import chain_columns
from lib.constants import CHAIN_CSV
from lib.errors import TableFormatError


def test_chain_csv_round_trip(tmp_path, prior_chain):
    columns = chain_columns(prior_chain)
    path = chains.write_chain_csv(columns, str(tmp_path))
    assert path == str(tmp_path / CHAIN_CSV)
    read = chains.read_chain_csv(path)
    assert list(read) == list(columns)
    assert read["iteration"].dtype == np.int64
    for name, values in columns.items():
        assert np.array_equal(read[name], values), name


def test_read_chain_csv_missing_columns(tmp_path):
    path = tmp_path / CHAIN_CSV
    path.write_text("iteration,chain,d_w0\n1,0,0.5\n")
    with pytest.raises(TableFormatError, match="missing chain columns nu_z0"):
        chains.read_chain_csv(str(path))


def test_read_chain_csv_not_numeric(tmp_path, prior_chain):
    columns = {name: values[:2] for name, values in chain_columns(prior_chain).items()}
    chains.write_chain_csv(columns, str(tmp_path))
    path = tmp_path / CHAIN_CSV
    lines = path.read_text().splitlines()
    lines[1] += "x"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(TableFormatError, match="ate_marginal is not numeric"):
        chains.read_chain_csv(str(path))


def test_read_chain_csv_no_rows(tmp_path):
    path = tmp_path / CHAIN_CSV
    path.write_text(",".join(chains.REQUIRED_COLUMNS) + "\n")
    with pytest.raises(TableFormatError, match="no draws"):
        chains.read_chain_csv(str(path))
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(TableFormatError, match="empty"):
        chains.read_chain_csv(str(empty))


def test_chain_meta(tmp_path):
    chain_path = str(tmp_path / CHAIN_CSV)
    assert chains.read_chain_meta(chain_path) == {}
    chains.write_chain_meta({"seed": 3, "chains": 1}, str(tmp_path))
    assert chains.read_chain_meta(chain_path) == {"chains": 1, "seed": 3}
