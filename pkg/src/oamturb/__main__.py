import sys

from oamturb.cli import main

sys.exit(main())
