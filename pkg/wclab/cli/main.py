import sys
from pathlib import Path

import tyro
from icecream import ic

from wclab.cli.args import COMMANDS
from wclab.cli.builders import resolve_threads
from wclab.cli.commands import HANDLERS
from wclab.cli.config import ExperimentConfig
from wclab.cli.output import Artifacts
from wclab.core.errors import CertificationError, ConfigError, GateViolationError, InadmissibleError

EXIT_USAGE = 1
EXIT_FAILED = 2

USAGE = """usage: wclab {constants,kappa,simulate,ot,verify,bounds} [--config FILE] [flags]

  constants   derived constants at (delta, T), pair validation/search, parameter scans
  kappa       evaluate or tabulate the weight function (eval | profile)
  simulate    coupled trajectories and replica ensembles (coupled | ensemble)
  ot          exact Wasserstein distance between two CSV point clouds
  verify      numerical checks (rho-onestep | w2-envelope | particles | poincare | grad-commute | kappa-conditions)
  bounds      concentration and entropy bounds (tail | ci | bias | entropy | entropy-check | pinsker | concentration)

Run `wclab <command> --help` for the flags of a command."""


def _config_path(argv: list[str]) -> Path | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if arg.startswith("--config="):
            return Path(arg.partition("=")[2])
    return None


def main(argv: list[str] | None = None) -> int:
    """Exit status: 0 when every check passes, 2 on a failed check, an inadmissible pair or a
    certification failure, 1 on usage and config errors."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE, file=sys.stderr)
        return 0 if argv else EXIT_USAGE
    command, rest = argv[0], argv[1:]

    try:
        default = None
        path = _config_path(rest)
        if command not in COMMANDS:
            raise ConfigError(f"Unknown command: {command}")
        if path is not None:
            config = ExperimentConfig.load(path)
            if config.command != command:
                raise ConfigError(f"Config {path} is for command {config.command!r}, not {command!r}")
            default = config.defaults()

        try:
            args = tyro.cli(COMMANDS[command], args=rest, default=default, prog=f"wclab {command}")
        except SystemExit as e:
            return 0 if e.code in (0, None) else EXIT_USAGE

        ic.configureOutput(prefix="wclab| ")
        if args.verbose:
            ic.enable()
        else:
            ic.disable()
        ic(args)

        out = Artifacts(args, args.name or command, resolve_threads(args))
        status = HANDLERS[command](args, out)
        out.finish()
        return status
    except (InadmissibleError, CertificationError, GateViolationError) as e:
        print(f"Error: {e}", file=sys.stderr)
        for violation in getattr(e, "violations", []):
            print(f"  violated: {violation}", file=sys.stderr)
        return EXIT_FAILED
    except (ConfigError, ValueError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
