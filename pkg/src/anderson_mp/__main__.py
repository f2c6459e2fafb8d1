import sys

from anderson_mp.cli import main

sys.exit(main())
