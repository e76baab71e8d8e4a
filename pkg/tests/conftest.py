import pytest

from drcgenre.audio_io import DEFAULT_GENRES, synth_clip
from drcgenre.experiment import clips_from_buffers

_acceptance_lines = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(name, ok, detail=""):
        _acceptance_lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_clips():
    """4 genres x 6 clips x 3 s at 16 kHz."""
    return clips_from_buffers([(g.name, synth_clip(g, i, 3.0, 16000)) for g in DEFAULT_GENRES for i in range(6)])
