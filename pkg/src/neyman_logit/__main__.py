import sys

from neyman_logit.cli import main

sys.exit(main())
