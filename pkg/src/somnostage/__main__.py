"""Allow ``python -m somnostage`` as an alias for the console script."""

from .cli import console_main

console_main()
