import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from geowarp.core.evaluation import (
    DEPTH_COLUMNS,
    FLOW_REGIONS,
    FlowGroundTruth,
    depth_metrics,
    flow_metrics,
    odometry_ate,
    read_depth_png,
    read_file_list,
    read_flow_png,
    read_mask_png,
    read_poses,
    summarize_rows,
)
from geowarp.core.fields.io import read_gwf
from geowarp.core.fields.models import ScalarField, VectorField

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOW_COLUMNS = ["name"] + [f"epe_{r}" for r in FLOW_REGIONS] + [f"fl_{r}" for r in FLOW_REGIONS]
DEPTH_CSV_COLUMNS = ["name"] + list(DEPTH_COLUMNS)
ODOMETRY_COLUMNS = ["start", "ate"]
SUMMARY_ROW = "mean"


def _item_names(gt_dir: Path, file_list: Optional[PathLike]) -> List[str]:
    names = read_file_list(file_list) if file_list else sorted(p.name for p in gt_dir.glob("*.png"))
    if not names:
        raise FileNotFoundError(f"no ground-truth PNG files in {gt_dir}")
    for name in names:
        if not (gt_dir / name).exists():
            raise FileNotFoundError(f"missing ground truth file: {gt_dir / name}")
    return names


def _prediction_path(pred_dir: Path, name: str) -> Path:
    """``name`` itself, else the same stem as a GWF1 container."""
    for candidate in (pred_dir / name, pred_dir / (Path(name).stem + ".gwf")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"missing prediction file for {name} in {pred_dir}")


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: ("" if row.get(k) is None else _cell(row[k])) for k in columns}
            )


def _cell(value: Any) -> Any:
    return repr(float(value)) if isinstance(value, (float, np.floating)) else value


def _write_report(outdir: Path, stem: str, columns, rows, summary) -> List[str]:
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(outdir / f"{stem}.csv", columns, rows + [{columns[0]: SUMMARY_ROW, **summary}])
    (outdir / f"{stem}.json").write_text(json.dumps({"items": rows, "mean": summary}, indent=2))
    return [f"{stem}.csv", f"{stem}.json"]


def eval_flow_service(
    pred_dir: PathLike,
    gt_dir: PathLike,
    outdir: PathLike,
    noc_dir: Optional[PathLike] = None,
    foreground_dir: Optional[PathLike] = None,
    file_list: Optional[PathLike] = None,
) -> Dict[str, Any]:
    """EPE and Fl per image over noc/occ/all (with ``noc_dir``) and bg/fg (with ``foreground_dir``)."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    names = _item_names(gt_dir, file_list)
    rows, per_item = [], {}
    for name in names:
        gt = read_flow_png(gt_dir / name)
        foreground = read_mask_png(Path(foreground_dir) / name) if foreground_dir else None
        if noc_dir:
            gt = FlowGroundTruth.from_noc_occ(gt, read_flow_png(Path(noc_dir) / name), foreground)
        elif foreground is not None:
            gt = FlowGroundTruth(gt.flow, gt.valid, foreground=foreground)

        path = _prediction_path(pred_dir, name)
        if path.suffix == ".png":
            pred = read_flow_png(path).flow
        else:
            pred = VectorField(read_gwf(path)[..., :2])
        metrics = flow_metrics(pred, gt).to_dict()
        per_item[name] = metrics
        rows.append({"name": name, **metrics})

    summary = summarize_rows(per_item)
    outputs = _write_report(Path(outdir), "flow_metrics", FLOW_COLUMNS, rows, summary)
    logger.info(f"flow evaluation over {len(names)} images: EPE-all {summary.get('epe_all')}")
    return {"items": len(names), "mean": summary, "columns": FLOW_COLUMNS, "outputs": outputs}


def eval_depth_service(
    pred_dir: PathLike,
    gt_dir: PathLike,
    outdir: PathLike,
    cap: float,
    median_scaling: bool,
    file_list: Optional[PathLike] = None,
) -> Dict[str, Any]:
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    names = _item_names(gt_dir, file_list)
    rows, per_item = [], {}
    for name in names:
        gt = read_depth_png(gt_dir / name)
        path = _prediction_path(pred_dir, name)
        if path.suffix == ".png":
            pred = read_depth_png(path)
        else:
            pred = ScalarField(read_gwf(path)[..., 0], role="measurement")
        metrics = depth_metrics(pred, gt, cap=cap, median_scaling=median_scaling).to_dict()
        per_item[name] = metrics
        rows.append({"name": name, **metrics})

    summary = summarize_rows(per_item)
    outputs = _write_report(Path(outdir), "depth_metrics", DEPTH_CSV_COLUMNS, rows, summary)
    logger.info(f"depth evaluation over {len(names)} images: AbsRel {summary['abs_rel']:.4f}")
    return {"items": len(names), "mean": summary, "columns": DEPTH_CSV_COLUMNS, "outputs": outputs}


def eval_odom_service(
    pred_file: PathLike,
    gt_file: PathLike,
    outdir: PathLike,
    snippet_len: int,
    alignment: str = "scale",
) -> Dict[str, Any]:
    """Snippet ATE mean ± std between two KITTI pose files."""
    result = odometry_ate(
        read_poses(pred_file), read_poses(gt_file), snippet_len=snippet_len, alignment=alignment
    )
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [{"start": i, "ate": float(e)} for i, e in enumerate(result.errors)]
    _write_csv(outdir / "odometry.csv", ODOMETRY_COLUMNS, rows)
    summary = result.to_dict()
    (outdir / "odometry.json").write_text(json.dumps({**summary, "per_snippet": rows}, indent=2))
    logger.info(f"ATE {result.mean:.4f} ± {result.std:.4f} over {len(rows)} snippets")
    return {**summary, "columns": ODOMETRY_COLUMNS, "outputs": ["odometry.csv", "odometry.json"]}
