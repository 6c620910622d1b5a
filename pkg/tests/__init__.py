from pathlib import Path

TESTS_ROOT = Path(__file__).parent
FIXTURES_ROOT = TESTS_ROOT / "fixtures"
