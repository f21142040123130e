"""Session host for interactive annotation.

Owns the live scene, applies panel/gesture commands through the geometry
and scene primitives, stamps every accepted command with a gap-free
revision number, records confirmed trials with server-side timing, and
keeps the append-only pose history served to the output panel.

One lock per session serializes writers; frame readers render snapshots
outside the lock.
"""

from __future__ import annotations

import queue
import threading
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dataset_io import (
    build_scene,
    export_pose,
    import_pose,
    list_sample_ids,
    load_sample,
    save_workspace,
)
from .errors import (
    InvalidCommandError,
    LayoutError,
    SessionCompleteError,
    UnknownObjectError,
    UnknownSessionError,
)
from .geometry import scale_depth, trackball_rotate, translate_in_view
from .raster import OverlayFrame, rasterize
from .study import AnnotationRecord, append_annotation_record, make_trial_plan

POSE_CHANGING_COMMANDS = {
    "gesture_rotate",
    "gesture_translate",
    "gesture_depth",
    "set_pose_text",
    "undo",
}


@dataclass(frozen=True)
class HistoryEntry:
    timestamp: str
    object_id: str
    pose_text: str


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class AnnotationSession:
    def __init__(
        self,
        dataset_root,
        user: str,
        seed: int,
        session_id: str | None = None,
        log_path=None,
        clock=time.perf_counter,
    ):
        self.session_id = session_id or uuid.uuid4().hex
        self.dataset_root = Path(dataset_root)
        self.user = user
        self.clock = clock
        self.log_path = Path(log_path) if log_path else None
        sample_ids = list_sample_ids(self.dataset_root)
        if not sample_ids:
            raise LayoutError(f"dataset {dataset_root} has no samples")
        self.plan = make_trial_plan(sample_ids, seed)
        self.cursor = 0
        self.revision = 0
        self.history: list[HistoryEntry] = []
        self.records: list[AnnotationRecord] = []
        self.active_object: str | None = None
        self._undo: list[tuple[str, object]] = []
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []
        self._handlers = {
            "load_sample": self._cmd_load_sample,
            "select_object": self._cmd_select_object,
            "gesture_rotate": self._cmd_gesture_rotate,
            "gesture_translate": self._cmd_gesture_translate,
            "gesture_depth": self._cmd_gesture_depth,
            "set_pose_text": self._cmd_set_pose_text,
            "set_display": self._cmd_set_display,
            "set_standard_view": self._cmd_set_standard_view,
            "confirm_annotation": self._cmd_confirm,
            "undo": self._cmd_undo,
            "export_pose": self._cmd_export_pose,
            "save_workspace": self._cmd_save_workspace,
        }
        self._load_trial(self.cursor)

    # -- lifecycle ----------------------------------------------------------

    def _load_trial(self, cursor: int) -> None:
        sample_id = self.plan.entries[cursor][0]
        self.sample = load_sample(self.dataset_root, sample_id)
        self.scene = build_scene(self.sample)  # identity poses
        self.active_object = None
        self._undo.clear()
        self.trial_started = self.clock()

    @property
    def complete(self) -> bool:
        return self.cursor >= len(self.plan.entries)

    def current_trial(self) -> tuple[str, int] | None:
        if self.complete:
            return None
        return self.plan.entries[self.cursor]

    # -- command processing ---------------------------------------------------

    def apply(self, command) -> dict:
        with self._lock:
            if not isinstance(command, dict):
                raise InvalidCommandError("command must be an object")
            ctype = command.get("type")
            handler = self._handlers.get(ctype)
            if handler is None:
                raise InvalidCommandError(f"unknown command type {ctype!r}")
            params = command.get("params", {})
            if not isinstance(params, dict):
                raise InvalidCommandError("params must be an object")
            try:
                result = handler(**params)
            except TypeError as exc:
                raise InvalidCommandError(f"bad parameters for {ctype}: {exc}") from exc
            self.revision += 1
            payload = {"revision": self.revision, "type": ctype}
            payload.update(result or {})
            self._notify(self.revision)
            return payload

    def _notify(self, revision: int) -> None:
        for q in list(self._subscribers):
            q.put(revision)

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        if q in self._subscribers:
            self._subscribers.remove(q)

    # -- helpers -----------------------------------------------------------

    def _target(self, object_id: str | None) -> str:
        if object_id is not None:
            self.scene.object_index(str(object_id))
            return str(object_id)
        if self.active_object is None:
            raise InvalidCommandError("no object selected")
        return self.active_object

    def _pivot_model(self, object_id: str):
        obj = self.scene._find(object_id)
        return np.asarray(obj.spacing, dtype=np.float64) * obj.mesh.centroid

    def _record_pose_change(self, object_id: str, new_pose, push_undo=True) -> None:
        old = self.scene.get_pose(object_id)
        if push_undo:
            self._undo.append((object_id, old))
        self.scene.set_pose(object_id, new_pose)
        self.history.append(
            HistoryEntry(
                timestamp=_utc_now(),
                object_id=object_id,
                pose_text=export_pose(new_pose),
            )
        )

    # -- handlers ------------------------------------------------------------

    def _cmd_load_sample(self, sample):
        self.sample = load_sample(self.dataset_root, str(sample))
        self.scene = build_scene(self.sample)
        self.active_object = None
        self._undo.clear()
        self.trial_started = self.clock()
        return {"sample": self.sample.sample_id}

    def _cmd_select_object(self, object=None):
        if object is not None:
            self.scene.object_index(str(object))
            self.active_object = str(object)
        else:
            self.active_object = None
        return {"active_object": self.active_object}

    def _cmd_gesture_rotate(self, start, end, object=None):
        object_id = self._target(object)
        pose = self.scene.get_pose(object_id)
        new = trackball_rotate(
            pose, start, end, self._pivot_model(object_id), self.scene.intrinsics
        )
        self._record_pose_change(object_id, new)
        return {"object": object_id, "pose": export_pose(new)}

    def _cmd_gesture_translate(self, start, end, object=None):
        object_id = self._target(object)
        pose = self.scene.get_pose(object_id)
        depth = float(pose.apply(self._pivot_model(object_id))[2])
        new = translate_in_view(pose, start, end, self.scene.intrinsics, depth=depth)
        self._record_pose_change(object_id, new)
        return {"object": object_id, "pose": export_pose(new)}

    def _cmd_gesture_depth(self, steps, object=None):
        object_id = self._target(object)
        pose = self.scene.get_pose(object_id)
        pivot_cam = pose.apply(self._pivot_model(object_id))
        new = scale_depth(pose, float(steps), pivot=pivot_cam)
        self._record_pose_change(object_id, new)
        return {"object": object_id, "pose": export_pose(new)}

    def _cmd_set_pose_text(self, text, object=None):
        object_id = self._target(object)
        self._record_pose_change(object_id, import_pose(str(text)))
        return {"object": object_id, "pose": export_pose(self.scene.get_pose(object_id))}

    def _cmd_set_display(self, object=None, **fields):
        object_id = self._target(object)
        allowed = {"visible", "opacity", "color", "mirror_x", "mirror_y", "spacing"}
        unknown = set(fields) - allowed
        if unknown:
            raise InvalidCommandError(f"unknown display fields: {sorted(unknown)}")
        self.scene.set_display(object_id, **fields)
        return {"object": object_id}

    def _cmd_set_standard_view(self, view):
        try:
            self.scene.set_standard_view(view)
        except ValueError as exc:
            raise InvalidCommandError(str(exc)) from exc
        return {"view": str(view)}

    def _cmd_confirm(self):
        if self.complete:
            raise SessionCompleteError("all trials have been confirmed")
        sample_id, repetition = self.plan.entries[self.cursor]
        duration = max(self.clock() - self.trial_started, 1e-9)
        timestamp = _utc_now()
        confirmed = []
        for obj in self.scene.objects:
            record = AnnotationRecord(
                user=self.user,
                sample=sample_id,
                trial=repetition,
                object_id=obj.object_id,
                pose=obj.pose,
                duration_s=duration,
                timestamp=timestamp,
            )
            self.records.append(record)
            if self.log_path is not None:
                append_annotation_record(self.log_path, record)
            confirmed.append(obj.object_id)
        self.cursor += 1
        if not self.complete:
            self._load_trial(self.cursor)
        return {
            "sample": sample_id,
            "trial": repetition,
            "objects": confirmed,
            "duration_s": duration,
            "complete": self.complete,
            "next": None if self.complete else self.plan.entries[self.cursor][0],
        }

    def _cmd_undo(self):
        if not self._undo:
            raise InvalidCommandError("nothing to undo in this trial")
        object_id, pose = self._undo.pop()
        self._record_pose_change(object_id, pose, push_undo=False)
        return {"object": object_id, "pose": export_pose(pose)}

    def _cmd_export_pose(self, object=None):
        object_id = self._target(object)
        return {"object": object_id, "text": export_pose(self.scene.get_pose(object_id))}

    def _cmd_save_workspace(self, path):
        save_workspace(self.scene, path)
        return {"path": str(path)}

    # -- read side -----------------------------------------------------------

    def frame(self, camera: str = "original", workers: int = 1) -> tuple[OverlayFrame, int]:
        with self._lock:
            snap = self.scene.snapshot()
            revision = self.revision
        try:
            return rasterize(snap, camera, workers=workers), revision
        except ValueError as exc:
            raise InvalidCommandError(str(exc)) from exc

    def scene_state(self) -> dict:
        with self._lock:
            trial = self.current_trial()
            return {
                "session": self.session_id,
                "revision": self.revision,
                "user": self.user,
                "sample": None if trial is None else trial[0],
                "trial": None if trial is None else trial[1],
                "cursor": self.cursor,
                "plan_length": len(self.plan.entries),
                "complete": self.complete,
                "active_object": self.active_object,
                "intrinsics": {
                    "fx": self.scene.intrinsics.fx,
                    "fy": self.scene.intrinsics.fy,
                    "cx": self.scene.intrinsics.cx,
                    "cy": self.scene.intrinsics.cy,
                    "width": self.scene.intrinsics.width,
                    "height": self.scene.intrinsics.height,
                },
                "objects": [
                    {
                        "id": obj.object_id,
                        "name": obj.mesh.name,
                        "color": list(obj.color),
                        "opacity": obj.opacity,
                        "visible": obj.visible,
                        "mirror_x": obj.mirror_x,
                        "mirror_y": obj.mirror_y,
                        "spacing": [float(s) for s in obj.spacing],
                        "pose": [float(v) for v in obj.pose.as_matrix().ravel()],
                    }
                    for obj in self.scene.objects
                ],
            }

    def history_entries(self) -> list[dict]:
        with self._lock:
            return [
                {"timestamp": h.timestamp, "object": h.object_id, "pose": h.pose_text}
                for h in self.history
            ]

    def mesh_payload(self, object_id: str) -> dict:
        with self._lock:
            obj = self.scene._find(str(object_id))
            return {
                "id": obj.object_id,
                "vertices": obj.mesh.vertices.tolist(),
                "triangles": obj.mesh.triangles.tolist(),
            }


class SessionManager:
    def __init__(self, dataset_root, log_dir=None, clock=time.perf_counter):
        self.dataset_root = Path(dataset_root)
        self.log_dir = Path(log_dir) if log_dir else None
        self.clock = clock
        self._sessions: dict[str, AnnotationSession] = {}
        self._lock = threading.Lock()

    def create_session(self, user: str, seed: int) -> AnnotationSession:
        session_id = uuid.uuid4().hex
        log_path = None
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            log_path = self.log_dir / f"{session_id}.jsonl"
        session = AnnotationSession(
            self.dataset_root,
            user=user,
            seed=seed,
            session_id=session_id,
            log_path=log_path,
            clock=self.clock,
        )
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> AnnotationSession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"no session {session_id!r}")
        return session
