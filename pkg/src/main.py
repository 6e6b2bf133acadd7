#!/usr/bin/env python3
"""
floquet-xxz - Main Application Entry Point
Floquet analysis of driven Rydberg chains and their XXZ description
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

# Add src directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

from dotenv import load_dotenv

# Application imports
from core.config import APP_NAME, APP_VERSION, RunConfig
from core.errors import ConfigError, FloquetXXZError
from experiments.acceptance import CHECKS, run_acceptance
from experiments.output import error_record, write_error_record
from experiments.runner import ExperimentRunner

LOG_FILE = "floquet_xxz.log"


def setup_logging(level: str = "INFO", log_file=None):
    """Setup application logging"""
    handlers = [logging.StreamHandler()]
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description="Floquet analysis of driven Rydberg chains")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("--log-level", default="INFO", help="Logging level (default: INFO)")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one configured experiment")
    run.add_argument("--config", required=True, help="INI file with [run], [drive], [sweep], [dynamics], [verify]")
    run.add_argument("--threads", type=int, help="Worker threads (overrides FLOQUET_THREADS)")
    run.add_argument("--out", help="Output directory (overrides FLOQUET_OUTPUT_DIR and the config)")

    verify = commands.add_parser("verify", help="Run the acceptance suite")
    verify.add_argument("--level", choices=("fast", "full"), default="fast")
    verify.add_argument("--only", nargs="+", choices=sorted(CHECKS), help="Run only the named checks")
    verify.add_argument("--out", help="Directory for the verification report")
    return parser


class FloquetApplication:
    """Main application class"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out_dir = Path(args.out or os.getenv("FLOQUET_OUTPUT_DIR", "results"))
        setup_logging(args.log_level, self.out_dir / LOG_FILE)
        self.logger = logging.getLogger(__name__)
        self.config = None

    def load_config(self) -> RunConfig:
        """Load the config file and apply command-line overrides"""
        config = RunConfig.from_file(self.args.config)
        if self.args.threads is not None:
            config.threads = self.args.threads
        if self.args.out:
            config.output_dir = self.args.out
        config.validate()
        logging.getLogger().setLevel(getattr(logging, config.log_level.upper(), logging.INFO))
        self.logger.info(f"Configuration loaded from {self.args.config}")
        return config

    def run_experiment(self) -> int:
        self.config = self.load_config()
        self.out_dir = Path(self.config.output_dir)
        files = ExperimentRunner(self.config).run(self.out_dir)
        self.logger.info(f"Wrote {len(files)} files to {self.out_dir}")
        return 0

    def run_verify(self) -> int:
        results = run_acceptance(self.args.level, self.args.only)
        report = {
            "level": self.args.level,
            "version": APP_VERSION,
            "checks": [
                {"name": r.name, "pass": r.passed, "detail": r.detail, "seconds": round(r.seconds, 3)}
                for r in results
            ],
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / f"verify_{self.args.level}.json").write_text(json.dumps(report, indent=2), encoding="utf-8")

        failed = [r.name for r in results if not r.passed]
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<24} {r.seconds:8.1f}s  {r.detail}")
        if failed:
            self.logger.error(f"{len(failed)} acceptance checks failed: {', '.join(failed)}")
            return 1
        self.logger.info(f"All {len(results)} acceptance checks passed")
        return 0

    def fail(self, error: Exception, exit_code: int) -> int:
        """Log the error and emit a machine-readable record"""
        experiment = self.config.experiment if self.config is not None else None
        record = error_record(error, exit_code, experiment)
        self.logger.error(f"{type(error).__name__}: {error}")
        write_error_record(record, self.out_dir)
        print(json.dumps(record), file=sys.stderr)
        return exit_code

    def run(self) -> int:
        """Run the application"""
        self.logger.info(f"Starting {APP_NAME} {APP_VERSION}")
        try:
            if self.args.command == "run":
                return self.run_experiment()
            return self.run_verify()
        except FloquetXXZError as e:
            return self.fail(e, e.exit_code)
        except Exception as e:
            self.logger.exception("Unexpected failure")
            return self.fail(e, 1)


def main(argv=None):
    """Main entry point"""

    load_dotenv()
    args = build_parser().parse_args(argv)

    # Create application
    try:
        app = FloquetApplication(args)
    except OSError as e:
        print(json.dumps(error_record(ConfigError(str(e)), 2)), file=sys.stderr)
        sys.exit(2)

    sys.exit(app.run())


if __name__ == "__main__":
    main()
