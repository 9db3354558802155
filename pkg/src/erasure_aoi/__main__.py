import sys

from erasure_aoi.cli import main

sys.exit(main())
