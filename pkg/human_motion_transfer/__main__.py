import sys

from human_motion_transfer.api.cli import main

if __name__ == "__main__":
    sys.exit(main())
