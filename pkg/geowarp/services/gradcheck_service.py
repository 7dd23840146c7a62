import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from geowarp.config.config import GradcheckOptions
from geowarp.core.losses.gradcheck import AnalyticHook, gradient_check

logger = logging.getLogger(__name__)

REPORT_FILE = "gradcheck.json"


def gradcheck_service(
    outdir: Union[str, Path],
    options: GradcheckOptions,
    seed: int = 0,
    perturb_analytic: Optional[AnalyticHook] = None,
) -> Dict[str, Any]:
    """Run the finite-difference suite and write the full report as JSON.

    ``perturb_analytic`` is forwarded to the checker so callers can inject a
    broken gradient.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    report = gradient_check(
        seed=seed,
        step=options.step,
        tolerance=options.tolerance,
        pixels_per_field=options.pixels_per_field,
        num_scales=options.scales,
        perturb_analytic=perturb_analytic,
    )
    payload = report.to_dict()
    (outdir / REPORT_FILE).write_text(json.dumps(payload, indent=2))
    if report.passed:
        logger.info(f"gradient check passed ({payload['checked']} entries)")
    else:
        logger.error(f"gradient check failed for {report.failures}")
    return {
        "seed": seed,
        "passed": report.passed,
        "failures": payload["failures"],
        "max_errors": payload["max_errors"],
        "checked": payload["checked"],
        "skipped": payload["skipped"],
        "removed_pixels": payload["removed_pixels"],
        "outputs": [REPORT_FILE],
    }
