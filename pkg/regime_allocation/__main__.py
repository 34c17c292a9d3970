import sys

from regime_allocation.cli import main

sys.exit(main())
