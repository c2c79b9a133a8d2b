"""CSV/JSON persistence for success curves and image-recovery reports."""
from __future__ import annotations

import csv
import io
import json
import math

from .experiments import SuccessCurve, SweepPoint

CURVE_COLUMNS = ("sweep_value", "successes", "trials", "success_rate", "mean_iters", "mean_rel_error")
CURVE_SCHEMA = "wirtflow.success_curve/1"


def _finite_or_none(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _finite_or_none(obj)


def curve_to_csv(curve: SuccessCurve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_COLUMNS)
    for p in curve.points:
        rel = "" if not math.isfinite(p.mean_rel_error) else repr(p.mean_rel_error)
        writer.writerow([repr(p.sweep_value), p.successes, p.trials, repr(p.success_rate),
                         repr(p.mean_iters), rel])
    return buf.getvalue()


def curve_to_dict(curve: SuccessCurve) -> dict:
    return _clean({
        "schema": CURVE_SCHEMA,
        "spec": curve.spec,
        "points": [
            {
                "sweep_value": p.sweep_value,
                "successes": p.successes,
                "trials": p.trials,
                "success_rate": p.success_rate,
                "mean_iters": p.mean_iters,
                "mean_rel_error": p.mean_rel_error,
            }
            for p in curve.points
        ],
    })


def curve_from_dict(data: dict) -> SuccessCurve:
    if data.get("schema") != CURVE_SCHEMA:
        raise ValueError(f"unexpected schema {data.get('schema')!r}")
    points = []
    for item in data["points"]:
        rel = item["mean_rel_error"]
        points.append(SweepPoint(float(item["sweep_value"]), int(item["successes"]), int(item["trials"]),
                                 float(item["mean_iters"]), math.nan if rel is None else float(rel)))
    return SuccessCurve(points, data.get("spec", {}))


def dumps_json(data: dict) -> str:
    return json.dumps(_clean(data), indent=2, allow_nan=False) + "\n"


def export_results(results, path, format: str = "csv") -> None:
    """Write a ``SuccessCurve`` (csv or json) or a plain dict report (json)."""
    if isinstance(results, SuccessCurve):
        if format == "csv":
            text = curve_to_csv(results)
        elif format == "json":
            text = dumps_json(curve_to_dict(results))
        else:
            raise ValueError(f"unknown format {format!r}")
    elif format == "json":
        text = dumps_json(results)
    else:
        raise ValueError("only success curves can be written as CSV")
    with open(path, "w", newline="") as fh:
        fh.write(text)
