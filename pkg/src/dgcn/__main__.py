import sys

from dgcn.cli import main

sys.exit(main())
