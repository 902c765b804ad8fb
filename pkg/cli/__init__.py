"""
Command-line interface for steinlab.
"""

__version__ = "0.1.0"
