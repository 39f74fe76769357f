import sys

from isps_cli.main import run_cli

sys.exit(run_cli())
