# This makes storage a Python package
