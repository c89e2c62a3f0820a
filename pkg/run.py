"""
Main Entry Point
Runs the eyecenter command line
"""

import os
import sys
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from eyecenter.commands import run


if __name__ == '__main__':
    sys.exit(run(sys.argv[1:]))
