"""Tests for cca-fuse."""
