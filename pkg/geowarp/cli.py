import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from geowarp import __version__
from geowarp.config.config import Config, RunConfig
from geowarp.config.constants import AblationVariants, RunDefaults
from geowarp.config.env_loader import load_env_file, print_env_status
from geowarp.logger import setup_logging
from geowarp.middleware import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, error_middleware
from geowarp.utils import profile_stage

logger = logging.getLogger(__name__)

# argparse dest -> dotted RunConfig key
FLAG_KEYS = {
    "seed": "seed",
    "out": "out",
    "scene": "synth.scene",
    "scene_dir": "optimize.scene_dir",
    "stages": "optimize.stages",
    "scales": "optimize.scales",
    "iterations": "optimize.iterations",
    "step_size": "optimize.step_size",
    "variant": "optimize.variant",
    "step": "gradcheck.step",
    "tolerance": "gradcheck.tolerance",
    "pixels_per_field": "gradcheck.pixels_per_field",
    "pred": "evaluation.pred",
    "gt": "evaluation.gt",
    "noc": "evaluation.noc",
    "foreground": "evaluation.foreground",
    "file_list": "evaluation.file_list",
    "cap": "evaluation.cap",
    "median_scaling": "evaluation.median_scaling",
    "snippet_len": "evaluation.snippet_len",
    "alignment": "evaluation.alignment",
}


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the validation code; 2 is reserved for numerical failures."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=None, help="Random seed (default: 0)")
    common.add_argument(
        "--out", type=str, default=None, help=f"Output directory (default: {RunDefaults.OUT_DIR.value})"
    )
    common.add_argument(
        "--env-file",
        type=str,
        default=None,
        help="Path to .env file (default: .env in project root)",
    )
    common.add_argument("--verbose", action="store_true", help="Debug logging and timings")

    parser = ArgumentParser(
        prog="geowarp", description="Geometric self-supervision: synthesis, optimization, evaluation"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    synth = sub.add_parser("synth", parents=[common], help="Render an oracle scene with ground truth")
    synth.add_argument("--scene", type=str, default=None, help="Preset name or scene spec JSON")

    opt = sub.add_parser("optimize", parents=[common], help="Direct optimization on a scene dir")
    opt.add_argument("--scene-dir", dest="scene_dir", type=str, default=None)
    opt.add_argument("--stages", type=str, default=None, help="1-based stage indices, e.g. 1,3")
    opt.add_argument("--scales", type=int, default=None, help="Pyramid levels")
    opt.add_argument("--iterations", type=int, default=None, help="Iterations per stage")
    opt.add_argument("--step-size", dest="step_size", type=float, default=None)
    opt.add_argument(
        "--variant",
        choices=AblationVariants.names(),
        default=None,
        help=f"Ablation variant (default: {AblationVariants.DEFAULT})",
    )

    grad = sub.add_parser("gradcheck", parents=[common], help="Analytic vs finite-difference check")
    grad.add_argument("--step", type=float, default=None)
    grad.add_argument("--tolerance", type=float, default=None)
    grad.add_argument("--pixels-per-field", dest="pixels_per_field", type=int, default=None)

    for name, help_text in (
        ("eval-flow", "EPE / Fl over KITTI flow PNGs"),
        ("eval-depth", "Eigen depth metrics over KITTI depth PNGs"),
        ("eval-odom", "5-frame ATE between KITTI pose files"),
    ):
        ev = sub.add_parser(name, parents=[common], help=help_text)
        ev.add_argument("--pred", type=str, default=None, help="Prediction directory or file")
        ev.add_argument("--gt", type=str, default=None, help="Ground-truth directory or file")
        if name != "eval-odom":
            ev.add_argument("--list", dest="file_list", type=str, default=None)
        if name == "eval-flow":
            ev.add_argument("--noc", type=str, default=None, help="flow_noc directory")
            ev.add_argument("--fg", dest="foreground", type=str, default=None, help="obj_map dir")
        if name == "eval-depth":
            ev.add_argument("--cap", type=float, default=None)
            ev.add_argument(
                "--no-median-scaling",
                dest="median_scaling",
                action="store_const",
                const=False,
                default=None,
            )
        if name == "eval-odom":
            ev.add_argument("--snippet-len", dest="snippet_len", type=int, default=None)
            ev.add_argument("--alignment", choices=("scale", "umeyama"), default=None)
    return parser


def flag_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, dest) for dest, key in FLAG_KEYS.items() if hasattr(args, dest)}


def dispatch(run_config: RunConfig) -> Dict[str, Any]:
    """Call the service behind ``run_config.command``."""
    out, seed, ev = run_config.out, run_config.seed, run_config.evaluation
    if run_config.command == "synth":
        from geowarp.services.synth_service import synth_service

        return synth_service(run_config.synth.scene, out, seed=seed)
    if run_config.command == "optimize":
        from geowarp.services.optimize_service import optimize_service

        return optimize_service(run_config.optimize.scene_dir, out, run_config.optimize, seed=seed)
    if run_config.command == "gradcheck":
        from geowarp.services.gradcheck_service import gradcheck_service

        return gradcheck_service(out, run_config.gradcheck, seed=seed)

    from geowarp.services import evaluation_service

    if run_config.command == "eval-flow":
        return evaluation_service.eval_flow_service(
            ev.pred, ev.gt, out, noc_dir=ev.noc, foreground_dir=ev.foreground, file_list=ev.file_list
        )
    if run_config.command == "eval-depth":
        return evaluation_service.eval_depth_service(
            ev.pred, ev.gt, out, cap=ev.cap, median_scaling=ev.median_scaling, file_list=ev.file_list
        )
    return evaluation_service.eval_odom_service(
        ev.pred, ev.gt, out, snippet_len=ev.snippet_len, alignment=ev.alignment
    )


def _load_environment(env_file: Optional[str], verbose: bool = False) -> None:
    env_loaded = False
    if env_file and Path(env_file).exists():
        load_dotenv(env_file, override=True)
        env_loaded = True
    else:
        env_loaded = load_env_file()
    setup_logging(force=True, verbose=verbose)
    if env_file and not env_loaded:
        logger.warning(f"Custom env file not found at {env_file}, using defaults")
    print_env_status()


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    args = build_parser().parse_args(argv)
    _load_environment(args.env_file, verbose=args.verbose)
    command = args.command

    try:
        run_config = Config.resolve(command, args.config, flag_overrides(args))
        run_config.validate_paths()
    except (ValueError, OSError) as e:
        code, body = error_middleware.handle_error(e, command)
        print(body)
        return code

    outdir = Path(run_config.out)
    Config.export_config(run_config, outdir)
    timings: Dict[str, dict] = {}
    try:
        with profile_stage(command, timings, verbose=args.verbose):
            summary = dispatch(run_config)
    except Exception as e:
        code, body = error_middleware.handle_error(e, command)
        print(body)
        return code

    summary = {"command": command, "seed": run_config.seed, "status": "ok", **summary}
    if command == "gradcheck" and not summary["passed"]:
        summary["status"] = "failed"
    (outdir / RunDefaults.SUMMARY_FILE.value).write_text(
        json.dumps(summary, indent=2, sort_keys=True)
    )
    if timings:
        summary["timing"] = timings
    print(json.dumps(summary, sort_keys=True))
    return EXIT_NUMERICAL if summary["status"] == "failed" else EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
