import io

import pytest

from collabhub.cli import run


@pytest.fixture
def root(tmp_path):
    return str(tmp_path / "data")


def cli(root, *argv):
    out = io.StringIO()
    code = run(["--storage-root", root, *argv], out=out)
    return code, out.getvalue()


def test_user_add_prints_allocation(root):
    code, out = cli(root, "user", "add", "alice", "alice@example.org")
    assert code == 0
    assert out == "alice 1000\n"
    code, out = cli(root, "user", "add", "bob", "bob@example.org")
    assert out == "bob 1001\n"


def test_user_add_persists_across_invocations(root):
    cli(root, "user", "add", "alice", "a@x")
    cli(root, "user", "add", "bob", "b@x")
    code, out = cli(root, "user", "list")
    assert code == 0
    assert out == "alice 1000\nbob 1001\n"


def test_duplicate_user_is_operation_error(root, capsys):
    cli(root, "user", "add", "alice", "a@x")
    code, out = cli(root, "user", "add", "alice", "a@x")
    assert code == 1
    assert out == ""
    assert "error: duplicate_username" in capsys.readouterr().err


def test_ldif_export(root):
    cli(root, "user", "add", "bob", "b@x")
    cli(root, "user", "add", "alice", "a@x")
    code, out = cli(root, "ldif", "export")
    assert code == 0
    assert out.index("uidNumber: 1000") < out.index("uidNumber: 1001")
    assert "dn: uid=alice,ou=users,dc=hub,dc=local" in out


def test_volume_add(root):
    cli(root, "user", "add", "alice", "a@x")
    code, out = cli(root, "volume", "add", "pkgs", "functional", "--maintainer", "alice")
    assert code == 0
    assert out.startswith("functional pkgs v-")


def test_volume_add_storage_with_acl(root):
    code, out = cli(root, "volume", "add", "scans", "storage", "--acl", "lab,ops")
    assert code == 0
    assert out.startswith("storage scans v-")


def test_snapshot_save_and_load(root, tmp_path):
    cli(root, "user", "add", "alice", "a@x")
    snap = str(tmp_path / "snap.json")
    code, out = cli(root, "snapshot", "save", snap)
    assert code == 0 and out == f"saved {snap}\n"

    other = str(tmp_path / "other")
    code, out = cli(other, "snapshot", "load", snap)
    assert code == 0
    code, out = cli(other, "user", "list")
    assert out == "alice 1000\n"


def test_corrupt_snapshot_is_operation_error(root, tmp_path, capsys):
    snap = tmp_path / "snap.json"
    cli(root, "snapshot", "save", str(snap))
    snap.write_text(snap.read_text().replace("sha256:", "sha256:0"))
    code, _ = cli(root, "snapshot", "load", str(snap))
    assert code == 1
    assert "corrupt_snapshot" in capsys.readouterr().err


def test_unknown_subcommand_exits_2(root):
    with pytest.raises(SystemExit) as exc:
        run(["--storage-root", root, "frobnicate"])
    assert exc.value.code == 2


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        run([])
    assert exc.value.code == 2
