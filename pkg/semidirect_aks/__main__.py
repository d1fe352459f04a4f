"""Run the command line with python -m semidirect_aks."""

import sys

from .cli import main

sys.exit(main())
