"""
Command modules for the feature-capsnet command line

Each module exposes register_commands(subparsers), adding its subcommands
with a `handler` default that returns the process exit code.
"""
