import sys

from g2kp.cli import main

sys.exit(main())
