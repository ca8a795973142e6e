import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from termweight.analysis import AnalyzerConfig


@pytest.fixture
def plain_config():
    """No stemming, no stopwords: terms are lowercased tokens."""
    return AnalyzerConfig(lowercase=True, stem="none", stopwords=None)
