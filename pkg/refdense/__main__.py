import sys

from refdense.main import main

sys.exit(main())
