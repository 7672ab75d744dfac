import sys

from cubenet.cli import main

sys.exit(main())
