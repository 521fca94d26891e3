"""Rule catalogue. Importing this package fills `asmlift.rewrite.rule.RULES` in application order."""

from asmlift.rewrite.rules import arith, bits, logic, twos

__all__ = ["arith", "bits", "logic", "twos"]
