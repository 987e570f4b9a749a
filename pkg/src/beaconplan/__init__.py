"""Beacon-planning toolkit: floor-plan image in, beacon locations and a
weighted, compass-oriented connectivity graph out."""

__version__ = "0.1.0"
