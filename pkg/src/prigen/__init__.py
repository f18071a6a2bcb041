"""Static extraction of permission-requiring code segments from Android apps
and privacy caption generation over AST path contexts."""

__version__ = "0.1.0"
