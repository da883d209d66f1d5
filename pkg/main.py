#!/usr/bin/env python3
"""
Main entry point for the varpen command-line tool.

    python main.py reproduce fig1
    python main.py --out runs/quartic sweep configs/quartic_dg.ini
"""
import sys
from pathlib import Path

# Add the src directory to Python path
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

# Load environment variables
from dotenv import load_dotenv
load_dotenv()

from cli import main

if __name__ == "__main__":
    sys.exit(main())
