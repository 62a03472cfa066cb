import sys

from src.cli.run import main

if __name__ == "__main__":
    sys.exit(main())
