"""Information about this library. This file will automatically changed."""

__version__ = "0.1.0"
# __author__
# __email__
