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
"""SVG panels of the posterior effect draws."""

import logging
import os
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # pylint: disable=wrong-import-position
import numpy as np  # pylint: disable=wrong-import-position

from lib.constants import FIG_ATE_HISTOGRAM, FIG_W_SCATTER, FIG_Z_SCATTER  # pylint: disable=wrong-import-position

logger = logging.getLogger(__name__)

# Fixed SVG output: text stays text, ids do not depend on the process.
SVG_STYLE = {
    "svg.fonttype": "none",
    "svg.hashsalt": "mbias-twoplate",
    "font.family": "DejaVu Sans",
    "font.size": 11,
}
POINTS_PER_INCH = 72
SCATTER_SIZE = (600, 600)
HISTOGRAM_SIZE = (800, 400)
DRAWS_GID = "draws"


def _figure(size):
    width, height = size
    return plt.figure(figsize=(width / POINTS_PER_INCH, height / POINTS_PER_INCH))


def _save(fig, path: str) -> str:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise OSError(f"Cannot write figure {path}: {e.strerror or e}") from e
    finally:
        plt.close(fig)
    logger.debug(f"Wrote {path}")
    return path


def scatter_svg(
    x: np.ndarray,
    y: np.ndarray,
    path: str,
    xlabel: str,
    ylabel: str,
    title: str,
    limit: float = 1.0,
) -> str:
    """One marker per draw on fixed axes [-limit, limit]^2."""
    with plt.rc_context(SVG_STYLE):
        fig = _figure(SCATTER_SIZE)
        ax = fig.add_subplot(1, 1, 1)
        markers = ax.scatter(np.asarray(x), np.asarray(y), s=4, alpha=0.5, linewidths=0)
        markers.set_gid(DRAWS_GID)
        ax.axhline(0.0, color="grey", linewidth=0.5)
        ax.axvline(0.0, color="grey", linewidth=0.5)
        ax.set_xlim(-limit, limit)
        ax.set_ylim(-limit, limit)
        ax.set_aspect("equal")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        return _save(fig, path)


def histogram_svg(
    values: np.ndarray, path: str, xlabel: str, title: str, bins: int = 80, limit: float = 1.0
) -> str:
    """Histogram over [-limit, limit] with one element per bin."""
    with plt.rc_context(SVG_STYLE):
        fig = _figure(HISTOGRAM_SIZE)
        ax = fig.add_subplot(1, 1, 1)
        _, _, patches = ax.hist(np.asarray(values), bins=bins, range=(-limit, limit))
        for i, patch in enumerate(patches):
            patch.set_gid(f"bin_{i}")
        ax.set_xlim(-limit, limit)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("draws")
        ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def write_panels(
    columns: Dict[str, np.ndarray], out_dir: str, bins: int = 80, limit: float = 1.0
) -> List[str]:
    """Effects given W, effects given Z and the histogram of the ATE."""
    return [
        scatter_svg(
            columns["d_w0"],
            columns["d_w1"],
            os.path.join(out_dir, FIG_W_SCATTER),
            xlabel="effect given W=0",
            ylabel="effect given W=1",
            title="Treatment effect within strata of W",
            limit=limit,
        ),
        scatter_svg(
            columns["d_z0"],
            columns["d_z1"],
            os.path.join(out_dir, FIG_Z_SCATTER),
            xlabel="effect given Z=0",
            ylabel="effect given Z=1",
            title="Treatment effect within strata of Z",
            limit=limit,
        ),
        histogram_svg(
            columns["ate_half_sum"],
            os.path.join(out_dir, FIG_ATE_HISTOGRAM),
            xlabel="average treatment effect",
            title="Posterior of the average treatment effect",
            bins=bins,
            limit=limit,
        ),
    ]
