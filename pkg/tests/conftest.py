from collections.abc import Iterator

import pytest

from faultfusion.tensor import get_default_dtype, set_default_dtype


@pytest.fixture(autouse=True)
def restore_default_dtype() -> Iterator[None]:
    """Commands switch the process-wide tensor precision; put it back after every test."""
    saved = get_default_dtype().__name__
    yield
    set_default_dtype(saved)
