"""Core data types, numerics and file formats."""
