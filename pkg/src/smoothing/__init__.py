# This makes smoothing a Python package
