import sys

from activity_space.cli import main

if __name__ == "__main__":
    sys.exit(main())
