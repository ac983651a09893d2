"""Datasets, model assembly, training and the CLI."""
