import sys

from monofair.cli import main

sys.exit(main())
