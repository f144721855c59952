"""Benchmark harness: problem files, generators, reference oracle, batch runs and the CLI."""
