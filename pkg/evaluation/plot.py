"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math

import matplotlib

matplotlib.use("Agg")

from matplotlib import pyplot as plt  # noqa: E402

from common.io import atomic_write  # noqa: E402
from evaluation.entity import EvalResult  # noqa: E402

MARKERS = ["o", "s", "^", "D", "v", "+", "x", "*"]


def plot_result(result: EvalResult, out_path: str) -> None:
    """
    NMSE (dB) and SDR against the sweep variable, one series per method.
    Methods without a VR output are left out of the SDR panel. The SVG is
    byte-identical for identical results and names the config hash and master
    seed of the run, when known, in its title and metadata.
    """
    provenance = run_provenance(result)
    with plt.rc_context({"svg.hashsalt": "vrnet", "svg.fonttype": "none"}):
        fig, (nmse_ax, sdr_ax) = plt.subplots(1, 2, figsize=(10, 4))

        for index, method in enumerate(result.methods):
            rows = result.series(method)
            marker = MARKERS[index % len(MARKERS)]
            x = [row.sweep_var for row in rows]

            nmse_ax.errorbar(x, [r.nmse_db for r in rows], yerr=[r.nmse_ci for r in rows], marker=marker, label=method)
            if all(not math.isnan(r.sdr) for r in rows):
                sdr_ax.errorbar(x, [r.sdr for r in rows], yerr=[r.sdr_ci for r in rows], marker=marker, label=method)

        for ax in (nmse_ax, sdr_ax):
            ax.set_xlabel(result.axis.label)
            ax.set_xticks(result.points)
            ax.grid(True, linestyle=":")

        nmse_ax.set_ylabel("NMSE (dB)")
        sdr_ax.set_ylabel("SDR")
        nmse_ax.legend()
        if sdr_ax.lines:
            sdr_ax.legend()

        metadata = {"Date": None}
        if provenance:
            fig.suptitle(provenance, fontsize="small")
            metadata["Description"] = provenance

        fig.tight_layout()
        with atomic_write(out_path, "wb") as stream:
            fig.savefig(stream, format="svg", metadata=metadata)

        plt.close(fig)


def run_provenance(result: EvalResult) -> str:
    fields = []
    if result.config_hash is not None:
        fields.append(f"config_hash: {result.config_hash}")
    if result.master_seed is not None:
        fields.append(f"master_seed: {result.master_seed}")

    return " ".join(fields)
