import sys

from shipland.cli import main

sys.exit(main())
