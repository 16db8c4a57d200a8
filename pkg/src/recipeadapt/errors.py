"""Shared exception base class.

Concrete errors live next to the code that raises them; everything inherits
from :class:`RecipeAdaptError` so callers can catch toolkit failures broadly.
"""


class RecipeAdaptError(Exception):
    pass
