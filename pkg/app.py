"""
Entry point for the command-line tools.
Redirects to the actual CLI in src/cli/main.py
"""

import sys
import os

# Add repository root to Python path
sys.path.insert(0, os.path.dirname(__file__))

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
