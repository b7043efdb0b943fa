# This makes manifold a Python package
