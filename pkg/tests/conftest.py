import time

import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def desk_dir(tmp_path_factory):
    """Output directory holding the default 300-scenario knowledge base."""
    from eoselm.cli import main

    out = tmp_path_factory.mktemp("desk")
    t0 = time.perf_counter()
    assert main(["gen-kb", "--out-dir", str(out)]) == 0
    (out / "gen-kb-wall.txt").write_text(f"{time.perf_counter() - t0}\n")
    return out


@pytest.fixture(scope="session")
def desk_kb(desk_dir):
    from eoselm.features import normalize_kb
    from eoselm.powersim.kb import read_kb

    return normalize_kb(read_kb(desk_dir / "kb.csv"))
