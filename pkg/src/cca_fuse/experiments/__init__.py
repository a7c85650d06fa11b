"""Experiment drivers: hyperparameter search, the simulation benchmark and the fusion pipeline."""
