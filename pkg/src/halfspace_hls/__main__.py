import sys

from halfspace_hls.cli import main

sys.exit(main())
