import argparse
import logging
import sys

import disk_rigidity
from disk_rigidity.config import load_config
from disk_rigidity.errors import ConfigError, RigidityError

logger = logging.getLogger("disk_rigidity")


def run(config):
    """Runs the configured experiment and returns the process exit status."""
    experiment = disk_rigidity.make(config.experiment)
    print("---------------------------------------")
    print(f"Experiment: {config.experiment}, Family: {config.family}, Seed: {config.seed}")
    print("---------------------------------------")
    try:
        result = experiment(config)
    except RigidityError as e:
        logger.error("%s failed: %s", config.experiment, e)
        print("---------------------------------------")
        print(f"{config.experiment}: {type(e).__name__}: {e}")
        print("---------------------------------------")
        return 1
    print("---------------------------------------")
    for line in result.lines():
        print(line)
    print(f"{'PASS' if result.passed else 'FAIL'} overall, artifacts in {config.out}/{config.experiment}")
    print("---------------------------------------")
    return 0 if result.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(description="Boundary and ray-transform experiments on deformed hyperbolic disks.")
    parser.add_argument("experiment", nargs="?", choices=sorted(disk_rigidity.registry), help="Experiment to run")
    parser.add_argument("--config", default=None, help="INI file with the experiment configuration")
    parser.add_argument("--out", default=None, help="Output directory, overrides [output] directory")
    parser.add_argument("--seed", default=None, type=int, help="Sampler seed, overrides [samplers] seed")
    parser.add_argument("--list", action="store_true", help="List the registered experiments and exit")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")

    if args.list:
        for name, spec in sorted(disk_rigidity.registry.items()):
            print(f"{name:<14}{spec.description}")
        return 0
    try:
        config = load_config(args.config, args.experiment, args.seed, args.out)
    except ConfigError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
