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
"""Chain CSV files and their run metadata."""

import logging
import os
from typing import Dict

import numpy as np
import pandas as pd

from datastores.files import read_json, write_json
from lib.constants import CHAIN_CSV, CHAIN_META_JSON
from lib.errors import TableFormatError

logger = logging.getLogger(__name__)

# Columns every chain file must carry for analysis.
REQUIRED_COLUMNS = (
    "iteration",
    "chain",
    "nu_z0",
    "nu_z1",
    "psi_z0_t0",
    "psi_z0_t1",
    "psi_z1_t0",
    "psi_z1_t1",
    "rho_z0_t0",
    "rho_z0_t1",
    "rho_z1_t0",
    "rho_z1_t1",
    "d_w0",
    "d_w1",
    "d_z0",
    "d_z1",
    "ate_half_sum",
    "ate_marginal",
)
INTEGER_COLUMNS = ("iteration", "chain")


def write_chain_csv(columns: Dict[str, np.ndarray], out_dir: str) -> str:
    """Write one row per kept draw; floats use the shortest round-trip representation."""
    path = os.path.join(out_dir, CHAIN_CSV)
    frame = pd.DataFrame(columns)
    try:
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e.strerror or e}") from e
    logger.debug(f"Wrote {len(frame)} draws to {path}")
    return path


def read_chain_csv(path: str) -> Dict[str, np.ndarray]:
    """Read a chain CSV back into named columns.

    Raises:
        TableFormatError: If a required column is missing or a value is not numeric.
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError as e:
        raise TableFormatError(f"{path}: chain file is empty.") from e
    except pd.errors.ParserError as e:
        raise TableFormatError(f"{path}: {e}") from e
    except OSError as e:
        raise OSError(f"Cannot read {path}: {e.strerror or e}") from e

    missing = [name for name in REQUIRED_COLUMNS if name not in frame.columns]
    if missing:
        raise TableFormatError(f"{path}: missing chain columns {', '.join(missing)}.")
    columns = {}
    for name in frame.columns:
        try:
            values = pd.to_numeric(frame[name], errors="raise").to_numpy()
        except (ValueError, TypeError) as e:
            raise TableFormatError(f"{path}: column {name} is not numeric.") from e
        columns[name] = values.astype(np.int64) if name in INTEGER_COLUMNS else values.astype(float)
    if len(frame) == 0:
        raise TableFormatError(f"{path}: chain file has no draws.")
    return columns


def write_chain_meta(meta: dict, out_dir: str) -> str:
    return write_json(meta, os.path.join(out_dir, CHAIN_META_JSON))


def read_chain_meta(chain_path: str) -> dict:
    """Metadata written next to a chain file, or an empty dict when there is none."""
    path = os.path.join(os.path.dirname(os.path.abspath(chain_path)), CHAIN_META_JSON)
    if not os.path.exists(path):
        return {}
    return read_json(path)
