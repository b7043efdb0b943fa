# This makes network a Python package
