"""Entry point for python -m hillgrowth."""

from hillgrowth.cli import main

if __name__ == "__main__":
    main()
