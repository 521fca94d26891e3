"""Base exception for everything the lifter raises on purpose."""


class AsmLiftError(Exception):
    """Root of the lifter's error hierarchy. Batch commands catch this per chunk."""
