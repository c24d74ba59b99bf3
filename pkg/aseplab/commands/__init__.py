"""CLI subcommands; each module exposes register() and run()."""
