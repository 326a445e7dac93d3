# Core module for the active inference control toolkit

__version__ = "1.0.0"
