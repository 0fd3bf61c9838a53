"""Command-line entry point: command configs, argument parsing and dispatch."""
