import logging
import os
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from tool_kit.artifact_store import ensure_dir  # noqa: E402

log = logging.getLogger(__name__)


class PlotUsingMatplotLib:
    """
    PNG figures for experiment artifacts.

    Every method draws one figure, saves it to ``path`` and closes it, so batch runs do
    not accumulate open figures.

    Parameters:
    -----------
    dpi : int, optional, default=120
        Resolution of the saved images.
    """

    def __init__(self, dpi: int = 120):
        self.__dpi = dpi

    @property
    def get_dpi(self) -> int:
        return self.__dpi

    def _save(self, fig, path: str) -> str:
        ensure_dir(os.path.dirname(os.path.abspath(path)))
        fig.tight_layout()
        fig.savefig(path, dpi=self.__dpi)
        plt.close(fig)
        log.debug("figure written to %s", path)
        return path

    def strip_profile(self, frame: pd.DataFrame, path: str) -> str:
        """Strip profile u(x) and the dilation field w* on a shared x axis."""
        fig, (ax_u, ax_w) = plt.subplots(1, 2, figsize=(10, 4))
        ax_u.plot(frame["x"], frame["u"], color="tab:blue")
        ax_u.set_xlabel("x")
        ax_u.set_ylabel("u(x)")
        ax_u.set_title("Minimal strip profile")
        ax_w.plot(frame["x"], frame["wstar"], color="tab:red")
        ax_w.set_yscale("log")
        ax_w.set_xlabel("x")
        ax_w.set_ylabel("w*(x)")
        ax_w.set_title("Dilation Jacobi field")
        return self._save(fig, path)

    def ideal_curves(self, components: Sequence[np.ndarray], path: str, title: str = "Ideal boundary") -> str:
        fig, ax = plt.subplots(figsize=(6, 6))
        for comp in components:
            ring = np.vstack([comp, comp[:1]])
            ax.plot(ring[:, 0], ring[:, 1], linewidth=0.8)
        ax.set_aspect("equal")
        ax.set_title(title)
        return self._save(fig, path)

    def far_apart(self, rows: List[dict], threshold: float, path: str) -> str:
        """Area gap (connected minus disconnected) against R/r, with the located threshold."""
        frame = pd.DataFrame(rows)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogx(frame["ratio"], frame["gap"], "o-", label="gap")
        ax.semilogx(frame["ratio"], frame["gap_dilated"], "x--", label="gap, dilated")
        ax.axhline(0.0, color="grey", linewidth=0.5)
        ax.axvline(threshold, color="tab:red", linestyle=":", label=f"threshold {threshold:.4g}")
        ax.set_xlabel("R / r")
        ax.set_ylabel("area gap")
        ax.legend()
        return self._save(fig, path)

    def eigen_ladder(self, ladder: List[dict], path: str) -> str:
        frame = pd.DataFrame(ladder)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(frame["radius"], frame["lambda1"], "o-")
        ax.set_xlabel("ball radius")
        ax.set_ylabel("λ1")
        ax.set_title("First Jacobi eigenvalue on the exterior of balls")
        return self._save(fig, path)
