import itertools
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from poseforge.dataset_io import export_pose, import_pose
from poseforge.errors import (
    InvalidCommandError,
    LayoutError,
    SessionCompleteError,
    UnknownObjectError,
)
from poseforge.geometry import RigidTransform
from poseforge.server import DEFAULT_PORT, PORT_ENV_VAR, create_app
from poseforge.service import AnnotationSession, SessionManager
from poseforge.study import read_annotation_log

from .conftest import write_dataset


@pytest.fixture
def dataset(tmp_path):
    return write_dataset(tmp_path / "data", sample_ids=("s0", "s1", "s2"))


def fake_clock():
    counter = itertools.count()
    return lambda: float(next(counter)) * 0.25


def make_session(dataset, seed=5, **kwargs):
    return AnnotationSession(dataset, user="u0", seed=seed, clock=fake_clock(), **kwargs)


def drag(session, start, end):
    return session.apply(
        {"type": "gesture_rotate", "params": {"start": list(start), "end": list(end)}}
    )


def select_and_place(session, z=300.0):
    """Select the first object and move it in front of the camera, the way
    an annotator starts on the identity-initialized scene."""
    oid = session.scene.objects[0].object_id
    session.apply({"type": "select_object", "params": {"object": oid}})
    session.apply(
        {"type": "set_pose_text", "params": {"text": export_pose(
            RigidTransform(np.eye(3), np.array([0.0, 0.0, z]))
        )}}
    )
    return oid


class TestSessionLifecycle:
    def test_plan_covers_each_sample_three_times(self, dataset):
        session = make_session(dataset)
        assert len(session.plan.entries) == 9
        for sid in ("s0", "s1", "s2"):
            assert sum(1 for s, _ in session.plan.entries if s == sid) == 3

    def test_same_seed_same_plan(self, dataset):
        assert make_session(dataset, seed=3).plan == make_session(dataset, seed=3).plan

    def test_empty_dataset(self, tmp_path):
        (tmp_path / "empty" / "samples").mkdir(parents=True)
        with pytest.raises(LayoutError):
            make_session(tmp_path / "empty")

    def test_objects_start_at_identity(self, dataset):
        session = make_session(dataset)
        for obj in session.scene.objects:
            assert np.array_equal(obj.pose.as_matrix(), np.eye(4))


class TestCommands:
    def test_select_then_null_drag_bumps_revision_keeps_pose(self, dataset):
        session = make_session(dataset)
        oid = session.scene.objects[0].object_id
        r1 = session.apply({"type": "select_object", "params": {"object": oid}})
        before = session.scene.get_pose(oid).as_matrix()
        r2 = drag(session, (10.0, 10.0), (10.0, 10.0))
        assert r2["revision"] == r1["revision"] + 1
        assert np.array_equal(session.scene.get_pose(oid).as_matrix(), before)

    def test_gap_free_revisions(self, dataset):
        session = make_session(dataset)
        select_and_place(session)
        revisions = [
            drag(session, (0.0, 0.0), (float(i + 1), 0.0))["revision"] for i in range(5)
        ]
        assert revisions == list(range(3, 8))

    def test_gesture_on_identity_pose_is_behind_camera(self, dataset):
        from poseforge.errors import BehindCameraError

        session = make_session(dataset)
        oid = session.scene.objects[0].object_id
        session.apply({"type": "select_object", "params": {"object": oid}})
        with pytest.raises(BehindCameraError):
            drag(session, (0.0, 0.0), (10.0, 0.0))

    def test_rejected_command_does_not_bump_revision(self, dataset):
        session = make_session(dataset)
        before = session.revision
        with pytest.raises(InvalidCommandError):
            session.apply({"type": "not_a_command"})
        with pytest.raises(UnknownObjectError):
            session.apply({"type": "select_object", "params": {"object": "ghost"}})
        assert session.revision == before

    def test_set_pose_text_round_trip(self, dataset):
        session = make_session(dataset)
        oid = session.scene.objects[0].object_id
        session.apply({"type": "select_object", "params": {"object": oid}})
        rng = np.random.default_rng(0)
        from .conftest import random_pose

        pose = random_pose(rng, max_translation=300.0)
        session.apply({"type": "set_pose_text", "params": {"text": export_pose(pose)}})
        stored = session.scene.get_pose(oid)
        assert np.abs(stored.as_matrix() - pose.as_matrix()).max() < 1e-7

    def test_undo_restores_previous_pose_bit_exact(self, dataset):
        session = make_session(dataset)
        oid = select_and_place(session)
        placed = session.scene.get_pose(oid).as_matrix()
        drag(session, (0.0, 0.0), (30.0, 12.0))
        session.apply({"type": "undo"})
        assert np.array_equal(session.scene.get_pose(oid).as_matrix(), placed)
        session.apply({"type": "undo"})  # back past the placement too
        assert np.array_equal(session.scene.get_pose(oid).as_matrix(), np.eye(4))

    def test_undo_with_empty_stack(self, dataset):
        session = make_session(dataset)
        with pytest.raises(InvalidCommandError):
            session.apply({"type": "undo"})

    def test_history_counts_pose_changing_commands(self, dataset):
        session = make_session(dataset)
        select_and_place(session)  # set_pose_text counts as one pose change
        drag(session, (0.0, 0.0), (10.0, 0.0))
        drag(session, (0.0, 0.0), (0.0, 10.0))
        session.apply({"type": "undo"})
        session.apply({"type": "set_display", "params": {"opacity": 0.5}})
        assert len(session.history) == 4  # placement + two drags + undo

    def test_gesture_depth_and_translate(self, dataset):
        session = make_session(dataset)
        oid = session.scene.objects[0].object_id
        session.apply({"type": "select_object", "params": {"object": oid}})
        session.apply(
            {"type": "set_pose_text", "params": {"text": export_pose(
                RigidTransform(np.eye(3), np.array([0.0, 0.0, 300.0]))
            )}}
        )
        session.apply({"type": "gesture_translate", "params": {"start": [0, 0], "end": [6, 0]}})
        session.apply({"type": "gesture_depth", "params": {"steps": 2.0}})
        z = session.scene.get_pose(oid).translation[2]
        assert z > 300.0

    def test_export_pose_command(self, dataset):
        session = make_session(dataset)
        oid = session.scene.objects[0].object_id
        out = session.apply({"type": "export_pose", "params": {"object": oid}})
        assert import_pose(out["text"]).allclose(RigidTransform.identity(), tol=0.0)

    def test_standard_view_command(self, dataset):
        session = make_session(dataset)
        session.apply({"type": "set_standard_view", "params": {"view": "top"}})
        assert not np.array_equal(session.scene.scene_camera.as_matrix(), np.eye(4))
        session.apply({"type": "set_standard_view", "params": {"view": "reset-to-original"}})
        assert np.array_equal(session.scene.scene_camera.as_matrix(), np.eye(4))


class TestConfirm:
    def test_full_session_produces_one_record_per_trial(self, dataset, tmp_path):
        log_path = tmp_path / "log.jsonl"
        session = make_session(dataset, log_path=log_path)
        for _ in range(9):
            session.apply({"type": "confirm_annotation"})
        assert len(session.records) == 9
        with pytest.raises(SessionCompleteError):
            session.apply({"type": "confirm_annotation"})
        logged = read_annotation_log(log_path)
        assert len(logged) == 9
        assert all(r.duration_s > 0 for r in logged)

    def test_record_pose_equals_scene_pose_bit_exact(self, dataset):
        session = make_session(dataset)
        oid = select_and_place(session)
        drag(session, (0.0, 0.0), (25.0, 40.0))
        pose_before_confirm = session.scene.get_pose(oid).as_matrix()
        result = session.apply({"type": "confirm_annotation"})
        rec = session.records[-1]
        assert np.array_equal(rec.pose.as_matrix(), pose_before_confirm)
        assert result["trial"] == session.plan.entries[0][1]

    def test_next_trial_resets_to_identity(self, dataset):
        session = make_session(dataset)
        select_and_place(session)
        drag(session, (0.0, 0.0), (25.0, 40.0))
        session.apply({"type": "confirm_annotation"})
        for obj in session.scene.objects:
            assert np.array_equal(obj.pose.as_matrix(), np.eye(4))
        assert session.active_object is None

    def test_trial_indices_follow_plan(self, dataset):
        session = make_session(dataset)
        seen = []
        for _ in range(9):
            out = session.apply({"type": "confirm_annotation"})
            seen.append((out["sample"], out["trial"]))
        assert seen == list(session.plan.entries)


class TestFrames:
    def test_identical_without_commands(self, dataset):
        session = make_session(dataset)
        f1, r1 = session.frame("original")
        f2, r2 = session.frame("original")
        assert r1 == r2
        assert np.array_equal(f1.color, f2.color)
        assert np.array_equal(f1.mask, f2.mask)

    def test_frame_changes_after_gesture(self, dataset):
        session = make_session(dataset)
        oid = session.scene.objects[0].object_id
        session.apply(
            {"type": "set_pose_text", "params": {"object": oid, "text": export_pose(
                RigidTransform(np.eye(3), np.array([0.0, 0.0, 150.0]))
            )}}
        )
        before, _ = session.frame("original")
        session.apply({"type": "select_object", "params": {"object": oid}})
        drag(session, (0.0, 0.0), (30.0, 0.0))
        after, _ = session.frame("original")
        assert (before.mask != after.mask).sum() > 0

    def test_frame_dimensions_match_intrinsics(self, dataset):
        session = make_session(dataset)
        frame, _ = session.frame("original")
        k = session.scene.intrinsics
        assert frame.color.shape == (k.height, k.width, 3)

    def test_replay_confirmed_pose_reproduces_overlay(self, dataset):
        session = make_session(dataset)
        oid = session.scene.objects[0].object_id
        session.apply(
            {"type": "set_pose_text", "params": {"object": oid, "text": export_pose(
                RigidTransform(np.eye(3), np.array([2.0, -3.0, 200.0]))
            )}}
        )
        confirm_frame, _ = session.frame("original")
        session.apply({"type": "confirm_annotation"})
        rec = session.records[-1]
        # replay: fresh scene from the same sample, stored pose applied
        from poseforge.dataset_io import build_scene, load_sample
        from poseforge.raster import rasterize

        replay_scene = build_scene(load_sample(dataset, rec.sample))
        replay_scene.set_pose(rec.object_id, rec.pose)
        replay = rasterize(replay_scene, "original")
        assert np.array_equal(replay.color, confirm_frame.color)


class TestHttpApi:
    @pytest.fixture
    def client(self, dataset, tmp_path):
        manager = SessionManager(dataset, log_dir=tmp_path / "logs")
        return TestClient(create_app(manager))

    def _create(self, client):
        response = client.post("/session", json={"user": "u0", "seed": 4})
        assert response.status_code == 200
        return response.json()

    def test_create_session(self, client):
        state = self._create(client)
        assert state["plan_length"] == 9
        assert state["revision"] == 0
        assert len(state["objects"]) == 1

    def test_command_and_frame_flow(self, client):
        state = self._create(client)
        sid = state["session"]
        oid = state["objects"][0]["id"]
        response = client.post(
            f"/session/{sid}/command",
            json={"command": {"type": "select_object", "params": {"object": oid}}},
        )
        assert response.status_code == 200
        revision = response.json()["revision"]
        frame = client.get(f"/session/{sid}/frame", params={"camera": "original"})
        assert frame.status_code == 200
        assert frame.headers["content-type"] == "image/png"
        assert frame.headers["x-revision"] == str(revision)
        assert frame.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_frame_revision_mismatch_409(self, client):
        state = self._create(client)
        sid = state["session"]
        response = client.get(f"/session/{sid}/frame", params={"revision": 42})
        assert response.status_code == 409

    def test_history_and_log_endpoints(self, client):
        state = self._create(client)
        sid = state["session"]
        oid = state["objects"][0]["id"]
        client.post(
            f"/session/{sid}/command",
            json={"command": {"type": "select_object", "params": {"object": oid}}},
        )
        placement = export_pose(RigidTransform(np.eye(3), np.array([0.0, 0.0, 300.0])))
        client.post(
            f"/session/{sid}/command",
            json={"command": {"type": "set_pose_text", "params": {"text": placement}}},
        )
        client.post(
            f"/session/{sid}/command",
            json={"command": {"type": "gesture_rotate",
                              "params": {"start": [0, 0], "end": [20, 5]}}},
        )
        history = client.get(f"/session/{sid}/history").json()
        assert len(history["history"]) == 2
        client.post(
            f"/session/{sid}/command", json={"command": {"type": "confirm_annotation"}}
        )
        log = client.get(f"/session/{sid}/log").json()
        assert len(log["records"]) == 1
        assert log["records"][0]["user"] == "u0"

    def test_unknown_session_404(self, client):
        assert client.get("/session/nope/frame").status_code == 404
        assert client.post("/session/nope/command", json={"command": {"type": "undo"}}).status_code == 404

    def test_typed_errors_map_to_400(self, client):
        state = self._create(client)
        sid = state["session"]
        response = client.post(
            f"/session/{sid}/command", json={"command": {"type": "bogus"}}
        )
        assert response.status_code == 400
        assert response.json()["error"] == "InvalidCommandError"

    def test_confirm_past_end_409(self, client):
        state = self._create(client)
        sid = state["session"]
        for _ in range(9):
            ok = client.post(
                f"/session/{sid}/command",
                json={"command": {"type": "confirm_annotation"}},
            )
            assert ok.status_code == 200
        final = client.post(
            f"/session/{sid}/command", json={"command": {"type": "confirm_annotation"}}
        )
        assert final.status_code == 409

    def test_scene_and_mesh_endpoints(self, client):
        state = self._create(client)
        sid = state["session"]
        oid = state["objects"][0]["id"]
        scene = client.get(f"/session/{sid}/scene").json()
        assert scene["intrinsics"]["width"] == 64
        mesh = client.get(f"/session/{sid}/mesh/{oid}").json()
        assert len(mesh["triangles"]) >= 1
        background = client.get(f"/session/{sid}/background")
        assert background.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_events_stream(self, dataset, tmp_path):
        import threading
        import time

        manager = SessionManager(dataset)
        app = create_app(manager)
        client = TestClient(app)
        state = self._create(client)
        sid = state["session"]

        def poke():
            time.sleep(0.3)
            with TestClient(app) as second:
                second.post(
                    f"/session/{sid}/command",
                    json={"command": {"type": "set_standard_view", "params": {"view": "top"}}},
                )

        thread = threading.Thread(target=poke)
        thread.start()
        payload = ""
        with client.stream("GET", f"/session/{sid}/events", params={"limit": 1}) as stream:
            for chunk in stream.iter_text():
                payload += chunk
                if "data:" in payload:
                    break
        thread.join()
        event = json.loads(payload.split("data:")[1].strip().splitlines()[0])
        assert event["revision"] == 1

    def test_default_port_constant(self):
        assert DEFAULT_PORT == 7646
        assert PORT_ENV_VAR == "POSEFORGE_PORT"
