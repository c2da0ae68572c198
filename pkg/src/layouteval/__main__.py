"""Entry point for ``python -m layouteval``."""

from .cli import main

main()
