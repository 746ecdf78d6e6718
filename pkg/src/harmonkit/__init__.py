"""harmonkit: interactive tabular data harmonization.

Match source table schemas and values against a target vocabulary, review
and correct the matches (human or automated reviewer), compile the
decisions into a replayable mapping specification, and materialize
harmonized tables. Ships a library, a CLI, and an HTTP session service.
"""

from .errors import HarmonkitError

__version__ = "0.1.0"

__all__ = ["HarmonkitError", "__version__"]
