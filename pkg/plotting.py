"""
Plotting module
Renders NMSE and pilot-overhead figures from an experiment CSV as SVG
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402
import pandas as pd  # noqa: E402

from errors import PlotError  # noqa: E402
from schemas import CSV_COLUMNS  # noqa: E402

logger = logging.getLogger(__name__)

# Figure name -> (x column, y column, y label, log y)
FIGURES: Dict[str, tuple] = {
    "nmse_vs_ris_elements": ("N", "nmse", "NMSE (median)", True),
    "nmse_vs_power": ("P_dBm", "nmse", "NMSE (median)", True),
    "pilot_overhead": ("N", "pilot_slots", "Pilot slots", True),
}

X_LABELS = {"N": "Number of RIS elements N", "P_dBm": "Transmit power (dBm)"}


def load_results(csv_path) -> pd.DataFrame:
    """Read an experiment CSV and check its columns"""
    path = Path(csv_path)
    if not path.exists():
        raise PlotError(f"CSV file not found: {path}")
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise PlotError(f"CSV file is empty: {path}") from None
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise PlotError(f"CSV is missing column(s): {', '.join(missing)}")
    if df.empty:
        raise PlotError(f"CSV has no records: {path}")
    return df


def _series(df: pd.DataFrame, x: str, y: str) -> Dict[str, pd.Series]:
    valid = df[~df["error_flag"].astype(bool)].dropna(subset=[y])
    return {
        estimator: group.groupby(x)[y].median().sort_index()
        for estimator, group in valid.groupby("estimator")
    }


def _render(name: str, df: pd.DataFrame, out_dir: Path) -> Path:
    x, y, y_label, log_y = FIGURES[name]
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot(1, 1, 1)
    for estimator, series in _series(df, x, y).items():
        ax.plot(series.index, series.values, marker="o", label=estimator)
    if log_y:
        ax.set_yscale("log", nonpositive="clip")
    ax.set_xlabel(X_LABELS[x])
    ax.set_ylabel(y_label)
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    path = out_dir / f"{name}.svg"
    fig.savefig(path, format="svg")
    return path


def emit_plots(csv_path, out_dir, figures: Optional[Sequence[str]] = None) -> List[Path]:
    """
    Render one SVG per figure, series keyed by estimator

    Args:
        csv_path: experiment CSV
        out_dir: output directory (created when missing)
        figures: subset of FIGURES keys; all by default

    Returns:
        Paths of the written SVG files
    """
    df = load_results(csv_path)
    names = list(figures) if figures is not None else list(FIGURES)
    unknown = [n for n in names if n not in FIGURES]
    if unknown:
        raise PlotError(f"Unknown figure(s): {', '.join(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [_render(name, df, out) for name in names]
    logger.info("Wrote %d figure(s) to %s", len(paths), out)
    return paths
