"""One-component CCA solvers, deflation and K-component embeddings."""
