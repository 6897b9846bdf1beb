"""Module entry point: ``python -m dnclab`` behaves like the dnc-lab script."""

from .cli import main

if __name__ == "__main__":
    main(prog_name="dnc-lab")
