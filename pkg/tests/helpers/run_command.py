import sys
from typing import List

import pytest
import sh


def run_command(command: List[str]):
    """Run ``python -m activity_space <command>`` and fail the test on a non-zero exit."""
    msg = None
    try:
        sh.Command(sys.executable)(["-m", "activity_space"] + command)
    except sh.ErrorReturnCode as e:
        msg = e.stderr.decode()
    if msg:
        pytest.fail(reason=msg)
