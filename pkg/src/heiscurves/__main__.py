import sys

from heiscurves.cli import main

sys.exit(main())
