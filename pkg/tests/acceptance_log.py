"""Acceptance result lines shared between the tests and the terminal summary."""

ACCEPTANCE_LINES = []
