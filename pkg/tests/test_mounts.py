import itertools
import random

import pytest

from collabhub import collab, errors, reports
from collabhub.model import (
    Container, ReportKind, Role, Scope, Store, VolumeKind, ServiceKind,
)
from collabhub.mounts import (
    MountEntry, MountPlan, plan_mounts, sanitize_name, validate_plan,
)
from tests.conftest import make_bundle


def oracle_plan(store, container):
    """Brute-force restatement of the mount rule table, kept deliberately
    separate from the production planner."""
    owner = store.users[container.owner_id]
    home = f"/home/{owner.username}"
    entries = [(f"users/{owner.username}", home, "rw")]
    for pid in container.attached_project_ids:
        p = store.projects[pid]
        pname = sanitize_name(p.name)
        role = p.members[owner.user_id]
        entries.append((f"projects/{pid}/workdir/{owner.username}",
                        f"{home}/workdir/{pname}", "rw"))
        share_ro = p.share_readonly_for_collaborators and role is Role.COLLABORATOR
        entries.append((f"projects/{pid}/share", f"{home}/share/{pname}",
                        "ro" if share_ro else "rw"))
        entries.append((f"projects/{pid}/prepare/{owner.username}",
                        f"{home}/reports/{pname}/prepare", "rw"))
        for r in store.reports.values():
            if r.project_id != pid:
                continue
            visible = (
                r.creator_id == owner.user_id
                or r.scope in (Scope.PUBLIC, Scope.INTERNAL)
            )
            if visible:
                entries.append((f"reports/{r.report_id}/v{r.version}",
                                f"{home}/reports/{pname}/{sanitize_name(r.name)}/v{r.version}",
                                "ro"))
    for b in store.bindings.values():
        if b.user_id == owner.user_id:
            entries.append((f"services/{owner.username}/{b.folder_label}",
                            f"{home}/service/{sanitize_name(b.folder_label)}", "rw"))
    for vid in container.attached_functional_volume_ids:
        v = store.volumes[vid]
        mode = "rw" if v.maintainer_id == owner.user_id else "ro"
        entries.append((v.backing_path, f"/vol/{sanitize_name(v.name)}", mode))
    storage = set()
    for pid in container.attached_project_ids:
        storage |= store.projects[pid].attached_volume_ids
    for vid in storage:
        v = store.volumes[vid]
        if v.kind is not VolumeKind.STORAGE:
            continue
        admitted = not v.acl or owner.user_id in v.acl or any(
            owner.user_id in store.groups.get(g, set()) for g in v.acl)
        if admitted:
            entries.append((v.backing_path, f"/mnt/{sanitize_name(v.name)}", "ro"))
    return sorted(entries, key=lambda e: e[1])


def as_tuples(plan):
    return [(e.source, e.target, e.mode) for e in plan.entries]


@pytest.fixture
def container_of(store):
    def make(owner, project_ids=(), fvol_ids=()):
        c = Container(
            container_id="c-test",
            owner_id=owner.user_id,
            name="nb",
            image_ref="img",
            attached_project_ids=list(project_ids),
            attached_functional_volume_ids=set(fvol_ids),
        )
        store.containers[c.container_id] = c
        return c
    return make


# --- basic shapes ---------------------------------------------------------

def test_minimal_plan_is_home_only(store, users, container_of):
    c = container_of(users["alice"])
    plan = plan_mounts(store, c)
    assert as_tuples(plan) == [("users/alice", "/home/alice", "rw")]
    assert plan.numeric_id == users["alice"].numeric_id


def test_owner_project_with_reports(store, users, container_of, tmp_path):
    alice = users["alice"]
    p = collab.create_project(store, alice.user_id, "p1", Scope.PRIVATE, "img")
    bundle = make_bundle(tmp_path)
    r1 = reports.publish_report(store, alice.user_id, p.project_id, "daily",
                                bundle, ReportKind.STATIC_BUNDLE, Scope.PUBLIC)
    r2 = reports.publish_report(store, alice.user_id, p.project_id, "daily",
                                bundle, ReportKind.STATIC_BUNDLE, Scope.PUBLIC)
    c = container_of(alice, project_ids=[p.project_id])
    targets = {e.target: e.mode for e in plan_mounts(store, c).entries}
    assert targets["/home/alice/workdir/p1"] == "rw"
    assert targets["/home/alice/share/p1"] == "rw"
    assert targets["/home/alice/reports/p1/prepare"] == "rw"
    assert targets[f"/home/alice/reports/p1/daily/v{r1.version}"] == "ro"
    assert targets[f"/home/alice/reports/p1/daily/v{r2.version}"] == "ro"


def test_readonly_share_and_excluded_storage(store, users, container_of):
    alice, bob = users["alice"], users["bob"]
    p = collab.create_project(store, alice.user_id, "p1", Scope.PRIVATE, "img")
    collab.add_collaborator(store, alice.user_id, p.project_id, bob.user_id, Role.COLLABORATOR)
    collab.configure_project(store, alice.user_id, p.project_id,
                             share_readonly_for_collaborators=True)
    vol = store.add_volume("secret", VolumeKind.STORAGE, acl={alice.user_id})
    p.attached_volume_ids.add(vol.volume_id)
    c = container_of(bob, project_ids=[p.project_id])
    targets = {e.target: e.mode for e in plan_mounts(store, c).entries}
    assert targets["/home/bob/share/p1"] == "ro"
    assert "/mnt/secret" not in targets


def test_functional_volume_modes(store, users, container_of):
    alice = users["alice"]
    vol = store.add_volume("pkgs", VolumeKind.FUNCTIONAL, maintainer_id=alice.user_id)
    maintainer_plan = plan_mounts(store, container_of(alice, fvol_ids=[vol.volume_id]))
    assert {e.target: e.mode for e in maintainer_plan.entries}["/vol/pkgs"] == "rw"
    store.containers.clear()
    other_plan = plan_mounts(store, container_of(users["bob"], fvol_ids=[vol.volume_id]))
    assert {e.target: e.mode for e in other_plan.entries}["/vol/pkgs"] == "ro"


def test_service_binding_folders(store, users, container_of):
    alice = users["alice"]
    store.add_binding(alice.user_id, ServiceKind.VERSION_CONTROL,
                      "https://g.example", "tok_" + "a" * 20, "git")
    store.add_binding(alice.user_id, ServiceKind.CLOUD_SYNC,
                      "https://s.example", "tok_" + "b" * 20, "Seafile")
    targets = {e.target for e in plan_mounts(store, container_of(alice)).entries}
    assert "/home/alice/service/git" in targets
    assert "/home/alice/service/seafile" in targets


def test_not_member_of_attached_project(store, users, container_of):
    p = collab.create_project(store, users["alice"].user_id, "p1", Scope.PRIVATE, "img")
    c = container_of(users["bob"], project_ids=[p.project_id])
    with pytest.raises(errors.NotMemberOfProject):
        plan_mounts(store, c)


def test_unknown_functional_volume(store, users, container_of):
    c = container_of(users["alice"], fvol_ids=["v-nope"])
    with pytest.raises(errors.UnknownVolume):
        plan_mounts(store, c)


def test_clashing_sanitized_names(store, users, container_of):
    alice, bob = users["alice"], users["bob"]
    p1 = collab.create_project(store, alice.user_id, "My Project", Scope.PUBLIC, "img")
    p2 = collab.create_project(store, bob.user_id, "my.project", Scope.PUBLIC, "img")
    collab.join_project(store, alice.user_id, p2.project_id)
    c = container_of(alice, project_ids=[p1.project_id, p2.project_id])
    with pytest.raises(errors.TargetCollision):
        plan_mounts(store, c)


def test_two_users_same_project_share_source_disjoint_workdirs(store, users):
    alice, bob = users["alice"], users["bob"]
    p = collab.create_project(store, alice.user_id, "p1", Scope.PUBLIC, "img")
    collab.join_project(store, bob.user_id, p.project_id)
    ca = Container(container_id="ca", owner_id=alice.user_id, name="a", image_ref="i",
                   attached_project_ids=[p.project_id])
    cb = Container(container_id="cb", owner_id=bob.user_id, name="b", image_ref="i",
                   attached_project_ids=[p.project_id])
    pa = {e.target: e.source for e in plan_mounts(store, ca).entries}
    pb = {e.target: e.source for e in plan_mounts(store, cb).entries}
    assert pa["/home/alice/share/p1"] == pb["/home/bob/share/p1"]
    assert pa["/home/alice/workdir/p1"] != pb["/home/bob/workdir/p1"]


# --- validate_plan --------------------------------------------------------

def test_validate_accepts_planner_output(store, users, container_of):
    plan = plan_mounts(store, container_of(users["alice"]))
    assert validate_plan(plan) == []


def test_validate_duplicate_target():
    plan = MountPlan(entries=[
        MountEntry("a", "/x/y", "rw"),
        MountEntry("b", "/x/y", "ro"),
    ], numeric_id=1000)
    assert any("duplicate target" in v for v in validate_plan(plan))


def test_validate_relative_target():
    plan = MountPlan(entries=[MountEntry("a", "x/y", "rw")], numeric_id=1000)
    assert any("non-absolute" in v for v in validate_plan(plan))


def test_validate_write_escalation():
    plan = MountPlan(entries=[
        MountEntry("src", "/a", "ro"),
        MountEntry("src", "/b", "rw"),
    ], numeric_id=1000)
    assert any("escalation" in v for v in validate_plan(plan))


def test_validate_prefix_parent():
    plan = MountPlan(entries=[
        MountEntry("a", "/x/y", "rw"),
        MountEntry("b", "/x/y/z", "rw"),
    ], numeric_id=1000)
    assert any("prefix-parent" in v for v in validate_plan(plan))


def test_validate_allows_home_root_parent():
    plan = MountPlan(entries=[
        MountEntry("a", "/home/alice", "rw"),
        MountEntry("b", "/home/alice/workdir/p", "rw"),
    ], numeric_id=1000)
    assert validate_plan(plan) == []


# --- randomized oracle equivalence ---------------------------------------

def random_fixture(seed, tmp_path):
    rng = random.Random(seed)
    store = Store(storage_root=tmp_path / f"root{seed}")
    n_users = rng.randint(1, 5)
    users = [store.register_user(f"user{i}", f"u{i}@x") for i in range(n_users)]
    for g in range(rng.randint(0, 2)):
        store.set_group(f"group{g}", {u.user_id for u in users if rng.random() < 0.5})
    projects = []
    for i in range(rng.randint(0, 4)):
        owner = rng.choice(users)
        p = collab.create_project(store, owner.user_id, f"proj{i}",
                                  rng.choice(list(Scope)), "img")
        for u in users:
            if u is not owner and rng.random() < 0.5:
                p.members[u.user_id] = rng.choice([Role.ADMINISTRATOR, Role.COLLABORATOR])
        p.share_readonly_for_collaborators = rng.random() < 0.5
        projects.append(p)
    volumes = []
    for i in range(rng.randint(0, 4)):
        if rng.random() < 0.5:
            acl = set()
            if rng.random() < 0.6:
                acl = {rng.choice(users).user_id}
                if store.groups and rng.random() < 0.5:
                    acl.add(rng.choice(sorted(store.groups)))
            v = store.add_volume(f"svol{i}", VolumeKind.STORAGE, acl=acl)
        else:
            v = store.add_volume(f"fvol{i}", VolumeKind.FUNCTIONAL,
                                 maintainer_id=rng.choice(users).user_id)
        volumes.append(v)
    for p in projects:
        for v in volumes:
            if v.kind is VolumeKind.STORAGE and rng.random() < 0.4:
                p.attached_volume_ids.add(v.volume_id)
    for p in projects:
        for member in list(p.members):
            if rng.random() < 0.4:
                r = reports.publish_report(
                    store, member, p.project_id, f"rep{rng.randint(0, 2)}",
                    make_bundle(tmp_path, name=f"b{seed}", files={"index.html": "<x>"}),
                    ReportKind.STATIC_BUNDLE, rng.choice(list(Scope)),
                )
    for u in users:
        if rng.random() < 0.3:
            store.add_binding(u.user_id, ServiceKind.VERSION_CONTROL,
                              "https://g", "tok_" + "x" * 20, f"svc{rng.randint(0, 1)}")
    owner = rng.choice(users)
    eligible = [p.project_id for p in projects if owner.user_id in p.members]
    fvols = [v.volume_id for v in volumes
             if v.kind is VolumeKind.FUNCTIONAL and rng.random() < 0.6]
    container = Container(
        container_id=f"c{seed}", owner_id=owner.user_id, name="nb", image_ref="img",
        attached_project_ids=rng.sample(eligible, rng.randint(0, len(eligible))),
        attached_functional_volume_ids=set(fvols),
    )
    return store, container


@pytest.mark.parametrize("seed", range(60))
def test_plan_matches_oracle_random(seed, tmp_path):
    store, container = random_fixture(seed, tmp_path)
    plan = plan_mounts(store, container)
    assert as_tuples(plan) == oracle_plan(store, container)
    # Determinism: double evaluation yields byte-identical serialization.
    assert plan.to_json() == plan_mounts(store, container).to_json()
    assert validate_plan(plan) == []


@pytest.mark.parametrize("seed", range(20))
def test_plan_no_write_escalation_random(seed, tmp_path):
    store, container = random_fixture(seed + 1000, tmp_path)
    plan = plan_mounts(store, container)
    ro_sources = {e.source for e in plan.entries if e.mode == "ro"}
    assert not any(e.source in ro_sources for e in plan.entries if e.mode == "rw")
