"""Experiment runners and the srsense bench CLI."""
