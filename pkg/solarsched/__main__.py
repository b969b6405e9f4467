import sys

from solarsched.main import main

sys.exit(main())
