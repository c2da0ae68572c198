from __future__ import annotations

import pytest

from layouteval import ClassRegistry


@pytest.fixture
def default_registry() -> ClassRegistry:
    return ClassRegistry.default()


@pytest.fixture
def two_class_registry() -> ClassRegistry:
    return ClassRegistry.from_bits({"background": 0x01, "text": 0x02})
