import sys

from maxlab.cli.cli import main

sys.exit(main())
