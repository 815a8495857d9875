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

import os

SRC_DIR = os.path.normpath(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
PROJECT_DIR = os.path.dirname(SRC_DIR)
DATA_DIR = os.path.join(SRC_DIR, "data")

# Bundled inputs.
TABLE1_PATH = os.path.join(DATA_DIR, "table1.csv")
M_GRAPH_PATH = os.path.join(DATA_DIR, "m_graph.edges")

# Variable order of the generative M-structure. Axes of the exact joint follow it.
VARIABLES = ("U", "W", "Z", "T", "Y")

# Edges of the M-structure (parent, child).
M_GRAPH_EDGES = (
    ("U", "T"),
    ("U", "Z"),
    ("W", "Z"),
    ("W", "Y"),
    ("T", "Y"),
)

# Observational counts indexed (t, z, y).
TABLE1_COUNTS = {
    (0, 0, 0): 33,
    (0, 0, 1): 2,
    (0, 1, 0): 95,
    (0, 1, 1): 50,
    (1, 0, 0): 100,
    (1, 0, 1): 47,
    (1, 1, 0): 60,
    (1, 1, 1): 240,
}

TABLE_CSV_HEADER = ("T", "Z", "Y", "N")
RECORD_CSV_HEADER = VARIABLES

# Output file names.
TABLE_CSV = "table.csv"
RECORDS_CSV = "records.csv"
CHAIN_CSV = "chain.csv"
SUMMARY_JSON = "summary.json"
ESTIMATES_JSON = "estimates.json"
ORACLE_JSON = "oracle.json"
RUN_CONFIG_JSON = "run_config.json"
CHAIN_META_JSON = "chain_meta.json"
FIG_W_SCATTER = "fig_a.svg"
FIG_Z_SCATTER = "fig_b.svg"
FIG_ATE_HISTOGRAM = "fig_c.svg"

# Tolerance used when validating simplex columns.
SIMPLEX_TOLERANCE = 1e-12
