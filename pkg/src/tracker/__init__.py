# This makes tracker a Python package
