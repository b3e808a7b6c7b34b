# refdense/service/reporting.py
"""reporting.py
EvalReport / AblationReport → 텍스트 표 · CSV 플롯 데이터.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List

from refdense.dto.report_dto import AblationReport, EvalReport
from refdense.prompts import REPORT_ABLATION, REPORT_EVAL, pct


def render_eval(report: EvalReport) -> str:
    return REPORT_EVAL.render(report=report)


def render_ablation(report: AblationReport) -> str:
    metrics = report.metrics
    rows = []
    for row in report.rows:
        cells = []
        for k in metrics:
            cell = row.cells.get(k)
            text = "-" if cell is None or cell.mean is None else f"{pct(cell.mean)}±{pct(cell.std)}"
            delta = row.delta.get(k)
            if delta is not None:
                text += f" ({100.0 * delta:+.1f})"
            cells.append(text)
        rows.append({"name": row.variant, "cells": cells})
    return REPORT_ABLATION.render(
        seeds=report.seeds,
        windows=report.windows,
        columns=[f"{k}(%)" for k in metrics],
        rows=rows,
        violations=report.violations,
        failures=report.failures,
    )


def write_eval_csv(report: EvalReport, path: str | Path) -> None:
    """클래스별 AP 와 τ 별 조건부 지표를 긴 형식 CSV 로 쓴다."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["section", "key", "metric", "value"])
        for name, ap in zip(report.class_names, report.per_class_ap):
            w.writerow(["per_class", name, "AP", "" if ap is None else f"{ap:.6f}"])
        w.writerow(["overall", "all", "mAP", "" if report.mAP is None else f"{report.mAP:.6f}"])
        for block in report.conditional:
            for k in ("mAP_ac", "F1_ac", "P_ac", "R_ac"):
                v = getattr(block, k)
                w.writerow(["conditional", f"tau={block.tau}", k, "" if v is None else f"{v:.6f}"])


def write_ablation_csv(report: AblationReport, path: str | Path) -> None:
    """실행별 지표를 ``variant,seed,metric,value`` CSV 로 쓴다."""
    rows: List[List[str]] = []
    for run in report.runs:
        for k in report.metrics:
            v = run.metric(k)
            rows.append([run.variant, str(run.seed), k, "" if v is None else f"{v:.6f}"])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "seed", "metric", "value"])
        w.writerows(rows)
