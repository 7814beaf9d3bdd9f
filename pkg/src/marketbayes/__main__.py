import sys

from marketbayes.cli import main

sys.exit(main())
