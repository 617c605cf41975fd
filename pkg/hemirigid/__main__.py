import sys

from hemirigid.cli import main

sys.exit(main())
