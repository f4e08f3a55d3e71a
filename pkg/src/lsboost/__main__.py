"""Allow ``python -m lsboost`` to invoke the command-line interface."""

from .cli import main_entry

main_entry()
