#!/usr/bin/env python3
"""
locsep command line
Generates seeded reverberant two-speaker datasets, runs the location-guided
separation chain (DS beamformer -> mask -> GEV / SDW-MWF / R1-MWF) and
reports SI-SDR improvements bucketed by DOA difference and SIR.

Examples:
    python run_cli.py make-dataset --n-scenes 10 --out runs/dataset
    python run_cli.py separate --manifest runs/dataset --bf r1 --doa gcc --out runs/separated
    python run_cli.py eval --records runs/separated/records --out runs/report
    python run_cli.py pipeline --n-scenes 60 --jobs 4 --out runs/desk
"""

import sys

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
