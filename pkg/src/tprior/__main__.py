import sys

from tprior.cli import main

sys.exit(main())
