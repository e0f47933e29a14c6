import sys

from blocksampler.cli import main

sys.exit(main())
