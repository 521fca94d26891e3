"""asmlift: lift annotated inline-assembly chunks into verification-friendly C."""

__version__ = "0.4.0"
