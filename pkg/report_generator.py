"""
Experiment report generation module
Responsible for the Markdown summary written next to each experiment CSV
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd
from jinja2 import Template

from harness import closed_form_overhead
from schemas import CSV_COLUMNS, ExperimentConfig, MetricsRecord

logger = logging.getLogger(__name__)


class ReportGenerator:
    """Experiment summary generator"""

    def __init__(self):
        self.template = Template(self._get_report_template())

    def _get_report_template(self) -> str:
        """Get report template"""
        return """# Experiment Report - {{ experiment_id }}

## 1. Scenario

**BS antennas (M)：** {{ bs_antennas }} ({{ rx_antennas }} receive / {{ tx_antennas }} transmit)
**Users (K)：** {{ users }}
**BS-RIS paths (L)：** {{ bs_ris_paths }}
**User paths (U)：** {{ user_paths }}
**Noise power：** {{ noise }}
**Trials per sweep point：** {{ trials }}
**Base seed：** {{ seed }}

---

## 2. NMSE by Sweep Point

| N | P (dBm) | Estimator | Median NMSE | Mean NMSE | Failed | Pilot slots | Reference slots |
|---|---------|-----------|-------------|-----------|--------|-------------|-----------------|
{% for row in rows -%}
| {{ row.N }} | {{ "%.1f"|format(row.P_dBm) }} | {{ row.estimator }} | {{ row.median }} | {{ row.mean }} | {{ row.failed }}/{{ row.runs }} | {{ row.pilot_slots }} | {{ row.reference }} |
{% endfor %}
---

## 3. Failures

{% if failures == 0 -%}
All {{ total }} estimator runs completed.
{%- else -%}
{{ failures }} of {{ total }} estimator runs failed; failed runs are kept in the CSV with an empty NMSE.
{%- endif %}

---

*Report Generation Time: {{ generated_at }}*
"""

    def summarize(self, df: pd.DataFrame) -> pd.DataFrame:
        """Median / mean NMSE, failure count and pilot slots per sweep point and estimator"""
        grouped = df.groupby(["N", "P_dBm", "estimator"], sort=True)
        summary = grouped.agg(
            median=("nmse", "median"),
            mean=("nmse", "mean"),
            failed=("error_flag", "sum"),
            runs=("trial", "count"),
            pilot_slots=("pilot_slots", "first"),
        )
        return summary.reset_index()

    def _build_context(self, cfg: ExperimentConfig, df: pd.DataFrame) -> Dict[str, Any]:
        """Build template context"""
        rows: List[Dict[str, Any]] = []
        for row in self.summarize(df).to_dict("records"):
            n = int(row["N"])
            shape = next((s for s in cfg.ris_shapes if s[0] * s[1] == n), (n, 1))
            reference = closed_form_overhead(cfg, cfg.geometry_for(tuple(shape)))
            rows.append({
                **row,
                "median": "-" if pd.isna(row["median"]) else f"{row['median']:.3e}",
                "mean": "-" if pd.isna(row["mean"]) else f"{row['mean']:.3e}",
                "failed": int(row["failed"]),
                "reference": reference if row["estimator"] == "proposed" else "-",
            })
        rx = cfg.resolved_rx_antennas
        return {
            "experiment_id": cfg.experiment_id,
            "bs_antennas": cfg.bs_antennas,
            "rx_antennas": rx,
            "tx_antennas": cfg.bs_antennas - rx,
            "users": cfg.users,
            "bs_ris_paths": cfg.bs_ris_paths,
            "user_paths": cfg.user_paths,
            "noise": "noiseless" if cfg.noise_dbm is None else f"{cfg.noise_dbm:.1f} dBm",
            "trials": cfg.trials,
            "seed": cfg.seed,
            "rows": rows,
            "failures": int(df["error_flag"].sum()),
            "total": len(df),
            "generated_at": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
        }

    def generate_report(self, cfg: ExperimentConfig, records: Sequence[MetricsRecord], out_path) -> Path:
        """Render the summary of records to out_path"""
        df = pd.DataFrame([r.model_dump() for r in records], columns=CSV_COLUMNS)
        df["nmse"] = pd.to_numeric(df["nmse"])
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.template.render(**self._build_context(cfg, df)), encoding="utf-8")
        logger.info("Wrote report to %s", path)
        return path
