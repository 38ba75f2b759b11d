import sys

EXIT_PASSED = 0
EXIT_ASSERTION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def check_dependencies():
    """Verify critical dependencies can be imported."""
    missing = []

    try:
        import numpy
        numpy.random.Philox  # counter-based streams
    except ImportError:
        missing.append("numpy")
    except AttributeError:
        missing.append("numpy (outdated - needs the Philox bit generator)")

    try:
        import scipy.stats
    except ImportError:
        missing.append("scipy")

    try:
        from shapely import STRtree
    except ImportError:
        missing.append("shapely (needs 2.0 or newer for STRtree queries)")

    try:
        from PySide6.QtCore import QThreadPool
    except ImportError:
        missing.append("PySide6 (QtCore is used for the replication worker pool)")

    try:
        from jsonschema import Draft202012Validator
    except ImportError:
        missing.append("jsonschema (needs draft 2020-12 support)")

    if missing:
        print("\n" + "="*60)
        print("ERROR: Missing or outdated dependencies:")
        for item in missing:
            print(f"  - {item}")
        print("\nPlease update your environment:")
        print("  Option 1: pip install -r requirements.txt --upgrade")
        print("  Option 2: Re-run setup.sh (deletes venv and reinstalls)")
        print("="*60 + "\n")
        sys.exit(EXIT_RUNTIME_ERROR)


# Check dependencies before importing heavy modules
check_dependencies()

import argparse
import logging

from config_manager import ConfigManager, apply_overrides, load_run_config, run_config_from_dict
from grainlab.errors import ConfigError
from model_catalog import get_reference_model, list_reference_models
from study_manager import SUPPORTED_STUDIES, StudyManager

logger = logging.getLogger("grainlab.main")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="grainlab",
        description="Run Monte Carlo studies of germ-grain random sets against their closed-form limits.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", help="path to a run configuration (JSON)")
    source.add_argument("--reference", metavar="NAME", help="run a reference model from the catalog")
    source.add_argument("--list-models", action="store_true", help="list the reference models and exit")
    parser.add_argument("--seed", type=int, help="master seed (unsigned 64-bit), overrides the config")
    parser.add_argument("--workers", type=int, help="worker threads; never changes the results")
    parser.add_argument("--out", help="output directory, overrides the config and GRAINLAB_OUTPUT_DIR")
    parser.add_argument("--study", choices=sorted(SUPPORTED_STUDIES), help="study to run, overrides the config")
    parser.add_argument("--validate", action="store_true", help="only report configuration diagnostics")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="warnings and errors only")
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def print_catalog():
    for entry in list_reference_models():
        print(f"{entry.name:28s} {entry.config['study']:16s} {entry.description}")
        print(f"{'':28s} exercises: {', '.join(entry.checks)}")


def load_config(args, settings):
    if args.config:
        config = load_run_config(args.config, settings)
    else:
        try:
            entry = get_reference_model(args.reference)
        except KeyError as e:
            raise ConfigError(str(e.args[0]), "/name")
        config = run_config_from_dict(entry.run_config(), settings)
    return apply_overrides(config, seed=args.seed, workers=args.workers, output_dir=args.out, study=args.study)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    if args.list_models:
        print_catalog()
        return EXIT_PASSED
    if not (args.config or args.reference):
        parser.error("one of --config, --reference or --list-models is required")

    settings = ConfigManager()
    try:
        config = load_config(args, settings)
    except ConfigError as e:
        print(f"Configuration error at {e.pointer}: {e.detail}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    manager = StudyManager()
    if args.validate:
        diagnostics = manager.validate(config)
        for diagnostic in diagnostics:
            print(diagnostic)
        if not diagnostics:
            print(f"{config.name}: configuration is runnable")
        return EXIT_CONFIG_ERROR if diagnostics else EXIT_PASSED

    result = manager.run(config)
    if not result['success']:
        print(f"ERROR: {result['error']}", file=sys.stderr)
        return result['exit_code']

    for record in result['summary']['assertions']:
        status = "PASS" if record['passed'] else "FAIL"
        print(f"{status} {record['name']}: estimate {record['estimate']:.6g} +- {record['stderr']:.2g}, "
              f"oracle {record['oracle']:.6g}, tolerance {record['tolerance']:.3g}")
    for path in result['artifacts']:
        print(f"wrote {path}")
    return result['exit_code']


if __name__ == "__main__":
    sys.exit(main())
