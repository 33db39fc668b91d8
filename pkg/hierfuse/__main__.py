import sys

from hierfuse.main import main

sys.exit(main())
