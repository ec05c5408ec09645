import pytest

from collabhub.model import Store


@pytest.fixture
def store(tmp_path):
    return Store(storage_root=tmp_path / "data")


@pytest.fixture
def users(store):
    """alice, bob, carol registered in that order."""
    return {
        name: store.register_user(name, f"{name}@example.org")
        for name in ("alice", "bob", "carol")
    }


def make_bundle(tmp_path, name="bundle", files=None):
    """A minimal static report source tree with an index.html."""
    root = tmp_path / name
    root.mkdir(parents=True, exist_ok=True)
    files = files or {"index.html": "<html>hello</html>"}
    for rel, content in files.items():
        dest = root / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(content)
    return root


def pytest_terminal_summary(terminalreporter):
    """Echo one line per acceptance criterion after the run."""
    import sys

    acceptance = (sys.modules.get("test_acceptance")
                  or sys.modules.get("tests.test_acceptance"))
    if acceptance is None or not acceptance.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for verdict, name in acceptance.VERDICTS:
        terminalreporter.write_line(f"[{verdict}] {name}")
