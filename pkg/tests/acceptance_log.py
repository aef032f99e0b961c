"""Collects one summary line per acceptance criterion for the terminal report."""
LINES = {}
RESULTS = []  # every LyapunovResult produced by the acceptance suite
