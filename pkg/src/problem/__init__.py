# This makes problem a Python package
