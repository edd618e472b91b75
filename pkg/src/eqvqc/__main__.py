import sys

from eqvqc.cli import main

sys.exit(main())
