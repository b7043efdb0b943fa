# This makes metrics a Python package
