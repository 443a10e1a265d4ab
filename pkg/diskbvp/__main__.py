"""
main entry point for diskbvp
"""

from .cli.interface import main

if __name__ == "__main__":
    main()
