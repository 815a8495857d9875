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
"""Input and output files: contingency tables, records, generative parameters, graphs."""

import json
import logging
from typing import List, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from causal.graph import Dag, format_edge_list, parse_edge_list
from causal.model import ContingencyTable, Record
from causal.schemas import GenerativeParams
from lib.constants import RECORD_CSV_HEADER, TABLE_CSV_HEADER
from lib.errors import TableFormatError

logger = logging.getLogger(__name__)


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise OSError(f"Cannot read {path}: {e.strerror or e}") from e


def _write_text(path: str, text: str) -> str:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e.strerror or e}") from e
    logger.debug(f"Wrote {path}")
    return path


def read_table(path: str) -> ContingencyTable:
    """Read a contingency table CSV with header T,Z,Y,N.

    Each (t, z, y) cell may appear at most once; absent cells count zero, so a
    header-only file is the empty table.

    Raises:
        TableFormatError: On a wrong header, non-binary index, negative or
            non-integer count, or a repeated cell.
        OSError: If the file cannot be read.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        header = ",".join(TABLE_CSV_HEADER)
        raise TableFormatError(f"{path}: file is empty, expected header {header}.") from e
    except pd.errors.ParserError as e:
        raise TableFormatError(f"{path}: {e}") from e
    except OSError as e:
        raise OSError(f"Cannot read {path}: {e.strerror or e}") from e

    if tuple(frame.columns) != TABLE_CSV_HEADER:
        raise TableFormatError(
            f"{path}: header must be {','.join(TABLE_CSV_HEADER)}, got {','.join(frame.columns)}."
        )
    cells = {}
    for line, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            t, z, y, n = (int(value) for value in row)
        except ValueError as e:
            raise TableFormatError(
                f"{path}:{line}: entries must be integers, got {','.join(row)}."
            ) from e
        if t not in (0, 1) or z not in (0, 1) or y not in (0, 1):
            raise TableFormatError(f"{path}:{line}: T, Z and Y must be 0 or 1.")
        if n < 0:
            raise TableFormatError(f"{path}:{line}: count must be non-negative, got {n}.")
        if (t, z, y) in cells:
            raise TableFormatError(f"{path}:{line}: cell T={t},Z={z},Y={y} appears twice.")
        cells[(t, z, y)] = n
    tab = ContingencyTable.from_cells(cells)
    logger.debug(f"Read {tab.total} records from {path}")
    return tab


def format_table(tab: ContingencyTable) -> str:
    frame = pd.DataFrame(tab.cells(), columns=list(TABLE_CSV_HEADER))
    return frame.to_csv(index=False, lineterminator="\n")


def write_table(tab: ContingencyTable, path: str) -> str:
    """Write all eight cells in T, Z, Y order, the layout of the bundled table."""
    return _write_text(path, format_table(tab))


def write_records(records: Union[np.ndarray, List[Record]], path: str) -> str:
    """Write sampled records, one row per unit with columns U,W,Z,T,Y."""
    rows = np.asarray(records, dtype=np.int8).reshape(-1, len(RECORD_CSV_HEADER))
    frame = pd.DataFrame(rows, columns=list(RECORD_CSV_HEADER))
    return _write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def read_params(path: str) -> GenerativeParams:
    """Read generative parameters from a flat JSON object of named probabilities.

    Raises:
        TableFormatError: If the JSON is malformed, keys are missing or a value is
            not a probability.
    """
    text = _read_text(path)
    try:
        flat = json.loads(text)
        if not isinstance(flat, dict):
            raise TableFormatError(f"{path}: expected a JSON object.")
        return GenerativeParams.from_flat(flat)
    except json.JSONDecodeError as e:
        raise TableFormatError(f"{path}: invalid JSON: {e.msg} at line {e.lineno}.") from e
    except ValidationError as e:
        first = e.errors()[0]["msg"]
        raise TableFormatError(f"{path}: {e.error_count()} invalid value(s): {first}.") from e
    except ValueError as e:
        if isinstance(e, TableFormatError):
            raise
        raise TableFormatError(f"{path}: {e}") from e


def write_params(gp: GenerativeParams, path: str) -> str:
    return _write_text(path, json.dumps(gp.to_flat(), indent=2) + "\n")


def read_graph(path: str) -> Dag:
    """Read a DAG from an edge-list file (``parent child`` per line)."""
    return parse_edge_list(_read_text(path))


def write_graph(g: Dag, path: str, header: str = None) -> str:
    return _write_text(path, format_edge_list(g, header))


def write_json(payload, path: str) -> str:
    """Write a JSON document with sorted keys so identical inputs give identical bytes."""
    return _write_text(path, json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def read_json(path: str) -> dict:
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise TableFormatError(f"{path}: invalid JSON: {e.msg} at line {e.lineno}.") from e
