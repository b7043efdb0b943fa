"""
Quick script to run a THANOS experiment from the project root

    python run_experiment.py run configs/sparse_pca_l1.env
    python run_experiment.py bounds configs/tiny.env
"""
import sys
import os

# Add the project root to the Python path
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

from src.main import main

if __name__ == "__main__":
    sys.exit(main())
