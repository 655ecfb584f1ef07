"""Experiment lab: workloads, Monte Carlo trials, oracle fuzzing, CSV output."""
