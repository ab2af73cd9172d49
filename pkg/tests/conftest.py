import os
import sys

import pytest

DATA = os.path.join(os.path.dirname(__file__), "data")

# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def join_mapping_text() -> str:
    with open(os.path.join(DATA, "traffic_join.ttl"), encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture
def speed_record() -> bytes:
    return b'{"speed":123.0,"time":"14:42:00","id":"lane1"}'


@pytest.fixture
def flow_record() -> bytes:
    return b'{"flow":1680,"time":"14:42:00","id":"lane1"}'


def file_mapping(mapping: str, speed_path: str, flow_path: str) -> str:
    """The traffic join mapping with its websocket sources swapped for local files."""
    return mapping.replace("ws://data-streamer:9001", f"file:{speed_path}").replace(
        "ws://data-streamer:9000", f"file:{flow_path}"
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} -- {detail}")


sys.path.insert(0, os.path.dirname(__file__))
