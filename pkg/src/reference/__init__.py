# This makes reference a Python package
