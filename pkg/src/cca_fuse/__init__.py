"""cca-fuse: graph-regularized sparse CCA for two-modality feature fusion."""

__version__ = "0.1.0"
