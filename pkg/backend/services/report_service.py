"""
Servicio de reportes: convierte veredictos, momentos y estimaciones de
oráculos en registros y los emite como texto, JSON-lines o CSV
"""
import io
import json
import logging
from typing import Any, Dict, List

import pandas as pd

from backend.errors import UsageError
from backend.models import (
    InequalityVerdict,
    McEstimate,
    MomentValue,
    QuadratureEstimate,
    Statement,
    SweepReport,
    Verdict,
    VerdictRecord,
)

logger = logging.getLogger(__name__)

FORMATS = ("text", "json", "csv")
VERDICT_COLUMNS = [
    "inputs",
    "statement",
    "ratio",
    "threshold",
    "margin",
    "verdict",
    "tolerance",
    "error_bound",
    "method",
]


class ReportService:
    """Serialización estable de registros para análisis posterior"""

    # ===========================================
    # REGISTROS
    # ===========================================

    @staticmethod
    def verdict_to_dict(record: VerdictRecord) -> Dict[str, Any]:
        """Registro de veredicto con claves estables"""
        verdict = record.verdict
        return {
            "inputs": dict(record.inputs),
            "statement": verdict.statement.value,
            "ratio": verdict.ratio,
            "threshold": verdict.threshold,
            "margin": verdict.margin,
            "verdict": verdict.verdict.value,
            "tolerance": verdict.tolerance,
            "error_bound": verdict.error_bound,
            "method": verdict.method,
        }

    @staticmethod
    def verdict_from_dict(data: Dict[str, Any]) -> VerdictRecord:
        """Inverso de verdict_to_dict"""
        try:
            return VerdictRecord(
                inputs=dict(data["inputs"]),
                verdict=InequalityVerdict(
                    statement=Statement(data["statement"]),
                    ratio=float(data["ratio"]),
                    threshold=float(data["threshold"]),
                    margin=float(data["margin"]),
                    verdict=Verdict(data["verdict"]),
                    tolerance=float(data["tolerance"]),
                    error_bound=float(data["error_bound"]),
                    method=str(data["method"]),
                ),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise UsageError(f"Registro de veredicto inválido: {e}") from e

    @staticmethod
    def moment_to_dict(inputs: Dict[str, Any], moment: MomentValue) -> Dict[str, Any]:
        return {
            "inputs": dict(inputs),
            "value": moment.value,
            "error_bound": moment.error_bound,
            "method": moment.method.value,
        }

    @staticmethod
    def ratio_to_dict(inputs: Dict[str, Any], ratio: float, error_bound: float, method: str) -> Dict[str, Any]:
        return {"inputs": dict(inputs), "ratio": ratio, "error_bound": error_bound, "method": method}

    @staticmethod
    def mc_to_dict(inputs: Dict[str, Any], estimate: McEstimate) -> Dict[str, Any]:
        return {
            "inputs": dict(inputs),
            "value": estimate.mean,
            "std_error": estimate.std_error,
            "n_samples": estimate.n_samples,
            "seed": estimate.seed,
            "variance_finite": estimate.variance_finite,
            "method": "monte_carlo",
        }

    @staticmethod
    def quad_to_dict(inputs: Dict[str, Any], estimate: QuadratureEstimate) -> Dict[str, Any]:
        return {
            "inputs": dict(inputs),
            "value": estimate.value,
            "error_bound": estimate.abs_error_estimate,
            "subdivisions": estimate.subdivisions,
            "method": "quadrature",
        }

    def sweep_summary(self, report: SweepReport) -> Dict[str, Any]:
        """Resumen determinista del barrido (sin timestamp)"""
        metadata = {key: value for key, value in report.metadata.items() if key != "timestamp"}
        return {
            "summary": {
                "records": len(report.records),
                "violations": report.violations,
                "counts": report.counts,
                "skipped": [{"inputs": s.inputs, "reason": s.reason} for s in report.skipped],
                "metadata": metadata,
            }
        }

    # ===========================================
    # EMISIÓN
    # ===========================================

    def render(self, rows: List[Dict[str, Any]], fmt: str, summary: Dict[str, Any] = None) -> str:
        """
        Convierte registros al formato pedido

        Args:
            rows: Registros (diccionarios)
            fmt: text | json | csv
            summary: Resumen opcional (línea final en json, pie en text)

        Returns:
            Texto listo para la salida estándar
        """
        if fmt not in FORMATS:
            raise UsageError(f"Formato desconocido: {fmt} (opciones: {', '.join(FORMATS)})")
        if fmt == "json":
            lines = [json.dumps(row, sort_keys=True) for row in rows]
            if summary is not None:
                lines.append(json.dumps(summary, sort_keys=True))
            return "\n".join(lines) + "\n" if lines else ""
        if fmt == "csv":
            return self._render_csv(rows)
        return self._render_text(rows, summary)

    @staticmethod
    def _render_csv(rows: List[Dict[str, Any]]) -> str:
        if not rows:
            return ""
        flat = [
            {key: (json.dumps(value, sort_keys=True) if isinstance(value, (dict, list)) else value)
             for key, value in row.items()}
            for row in rows
        ]
        columns: List[str] = []
        for row in flat:
            columns.extend(key for key in row if key not in columns)
        if set(columns) == set(VERDICT_COLUMNS):
            columns = VERDICT_COLUMNS
        buffer = io.StringIO()
        pd.DataFrame(flat, columns=columns).to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue()

    @staticmethod
    def _render_text(rows: List[Dict[str, Any]], summary: Dict[str, Any] = None) -> str:
        lines = []
        for row in rows:
            inputs = ", ".join(f"{key}={value}" for key, value in row.get("inputs", {}).items())
            fields = []
            for key, value in row.items():
                if key == "inputs":
                    continue
                fields.append(f"{key}={value:.12g}" if isinstance(value, float) else f"{key}={value}")
            lines.append(f"[{inputs}] " + " ".join(fields))
        if summary is not None:
            lines.append("-" * 60)
            for key, value in summary.get("summary", summary).items():
                lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n" if lines else ""


# Instancia global
report_service = ReportService()
