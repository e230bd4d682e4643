import sys

from inclsolve.cli import main

sys.exit(main())
