import sys

from curiosity_critic.cli import main

sys.exit(main())
