"""HTTP session service: stepwise rollouts driven by an observer client."""

from __future__ import annotations

import enum
import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import features as F
from .corpus import Sequence, _object_to_dict, action_from_dict, action_to_dict
from .model import StepContext
from .world import (
    Action,
    Primitive,
    TaskSpec,
    WorldState,
    apply_primitive,
    check_preconditions,
    task_goal_satisfied,
)

DEFAULT_K = 3
EVENT_POLL_TIMEOUT = 30.0


class ApiError(Exception):
    """Request failure carrying an HTTP status code."""

    status = 400

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class NotFound(ApiError):
    status = 404


class BadRequest(ApiError):
    status = 400


class Conflict(ApiError):
    """The request raced another mutation or targets a finished session."""

    status = 409


class SessionStatus(enum.Enum):
    AWAITING_CHOICE = "awaiting_choice"
    RUNNING = "running"
    DONE = "done"
    ABORTED = "aborted"


@dataclass
class Session:
    session_id: str
    scenario_id: str
    spec: TaskSpec
    initial_state: WorldState
    state: WorldState
    history: F.History
    trace: list[Action] = field(default_factory=list)
    status: SessionStatus = SessionStatus.AWAITING_CHOICE
    version: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    cond: threading.Condition = None

    def __post_init__(self):
        self.cond = threading.Condition(self.lock)


def _state_to_dict(state: WorldState) -> dict:
    return {
        "objects": [_object_to_dict(state.obj(i)) for i in state.ids()],
        "robot": {
            "position": list(state.robot.position),
            "gripper": state.robot.gripper,
        },
    }


class SessionService:
    """Transport-independent core behind the HTTP handler.

    The model weights and the scenario corpus are immutable after
    construction; each session serializes its own mutations.
    """

    def __init__(self, weights: np.ndarray, corpus: list[Sequence]):
        self._weights = np.asarray(weights, dtype=float)
        self._corpus = list(corpus)
        self._by_scenario = {seq.scenario_id: seq for seq in self._corpus}
        self._sessions: dict[str, Session] = {}
        self._registry = threading.Lock()
        self._next = 1

    # -- lookups

    def scenarios(self) -> list[dict]:
        return [
            {
                "scenario_id": seq.scenario_id,
                "environment_id": seq.environment_id,
                "task": seq.spec.task.name.lower(),
                "task_args": {"g_a1": seq.spec.g_a1, "g_a2": seq.spec.g_a2},
                "steps": len(seq.actions),
            }
            for seq in self._corpus
        ]

    def _session(self, session_id: str) -> Session:
        with self._registry:
            session = self._sessions.get(session_id)
        if session is None:
            raise NotFound(f"unknown session {session_id!r}")
        return session

    # -- session lifecycle

    def create(self, scenario_id: str) -> dict:
        seq = self._by_scenario.get(scenario_id)
        if seq is None:
            raise NotFound(f"unknown scenario {scenario_id!r}")
        with self._registry:
            session_id = f"s{self._next:04d}"
            self._next += 1
            session = Session(
                session_id=session_id,
                scenario_id=scenario_id,
                spec=seq.spec,
                initial_state=seq.initial_state,
                state=seq.initial_state,
                history=F.EMPTY_HISTORY,
            )
            self._sessions[session_id] = session
        with session.lock:
            return self._snapshot(session)

    def snapshot(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            return self._snapshot(session)

    def _snapshot(self, session: Session) -> dict:
        return {
            "session_id": session.session_id,
            "scenario_id": session.scenario_id,
            "status": session.status.value,
            "step": len(session.trace),
            "version": session.version,
            "task": {
                "task": session.spec.task.name.lower(),
                "g_a1": session.spec.g_a1,
                "g_a2": session.spec.g_a2,
            },
            "goal_satisfied": task_goal_satisfied(session.state, session.spec),
            "state": _state_to_dict(session.state),
            "trace": [action_to_dict(a) for a in session.trace],
        }

    # -- proposals and choices

    def _ranked(self, session: Session, k: int) -> list[dict]:
        """Top-k executable proposals with per-block score contributions."""
        ctx = StepContext(session.state, session.spec, session.history)
        scores = ctx.scores(self._weights)
        order = np.argsort(-scores, kind="stable")
        out = []
        for idx in order:
            action = ctx.action_at(int(idx))
            if not check_preconditions(session.state, action)[0]:
                continue
            contributions = F.block_scores(self._weights, ctx.features_at(int(idx)))
            out.append(
                {
                    "action": action_to_dict(action),
                    "score": float(scores[idx]),
                    "block_scores": [
                        {"block": name, "score": value} for name, value in contributions.items()
                    ],
                }
            )
            if len(out) == k:
                break
        return out

    def proposals(self, session_id: str, k: int = DEFAULT_K) -> dict:
        if k < 1:
            raise BadRequest("k must be at least 1")
        session = self._session(session_id)
        with session.lock:
            if session.status is not SessionStatus.AWAITING_CHOICE:
                raise Conflict(f"session is {session.status.value}")
            return {
                "session_id": session.session_id,
                "step": len(session.trace),
                "k": k,
                "proposals": self._ranked(session, k),
            }

    def choose(self, session_id: str, index: int, step: int, k: int = DEFAULT_K) -> dict:
        session = self._session(session_id)
        with session.lock:
            if session.status is not SessionStatus.AWAITING_CHOICE:
                raise Conflict(f"session is {session.status.value}")
            if step != len(session.trace):
                raise Conflict(
                    f"stale choice: session is at step {len(session.trace)}, not {step}"
                )
            ranked = self._ranked(session, max(k, index + 1))
            if not 0 <= index < len(ranked):
                raise BadRequest(f"proposal index {index} out of range")
            session.status = SessionStatus.RUNNING
            try:
                action = action_from_dict(ranked[index]["action"])
                session.state = apply_primitive(session.state, action)
                session.history = session.history.advance(action)
                session.trace.append(action)
                if action.primitive is Primitive.DONE:
                    session.status = SessionStatus.DONE
                elif not self._ranked(session, 1):
                    session.status = SessionStatus.ABORTED
                else:
                    session.status = SessionStatus.AWAITING_CHOICE
            except Exception:
                session.status = SessionStatus.ABORTED
                raise
            finally:
                session.version += 1
                session.cond.notify_all()
            return self._snapshot(session)

    def reset(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            session.state = session.initial_state
            session.history = F.EMPTY_HISTORY
            session.trace = []
            session.status = SessionStatus.AWAITING_CHOICE
            session.version += 1
            session.cond.notify_all()
            return self._snapshot(session)

    def events(self, session_id: str, cursor: int, timeout: float = EVENT_POLL_TIMEOUT) -> dict:
        """Long-poll: returns once the session moves past `cursor`."""
        session = self._session(session_id)
        with session.lock:
            session.cond.wait_for(lambda: session.version > cursor, timeout=timeout)
            return {
                "session_id": session.session_id,
                "version": session.version,
                "status": session.status.value,
                "step": len(session.trace),
                "trace": [action_to_dict(a) for a in session.trace],
            }


# ---------------------------------------------------------------------------
# HTTP transport

_ROUTES = (
    ("POST", re.compile(r"^/sessions$"), "create"),
    ("GET", re.compile(r"^/sessions/([^/]+)/state$"), "state"),
    ("GET", re.compile(r"^/sessions/([^/]+)/proposals$"), "proposals"),
    ("POST", re.compile(r"^/sessions/([^/]+)/choose$"), "choose"),
    ("POST", re.compile(r"^/sessions/([^/]+)/reset$"), "reset"),
    ("GET", re.compile(r"^/sessions/([^/]+)/events$"), "events"),
    ("GET", re.compile(r"^/scenarios$"), "scenarios"),
)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: SessionService = None

    def log_message(self, fmt, *args):
        pass

    def _reply(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length))
        except json.JSONDecodeError as exc:
            raise BadRequest(f"invalid JSON body: {exc}") from exc

    def _query(self) -> dict:
        from urllib.parse import parse_qs, urlparse

        return {k: v[-1] for k, v in parse_qs(urlparse(self.path).query).items()}

    def _route(self, method: str):
        path = self.path.split("?", 1)[0]
        for verb, pattern, name in _ROUTES:
            match = pattern.match(path)
            if match and verb == method:
                return name, match.groups()
        raise NotFound(f"no route for {method} {path}")

    def _dispatch(self, method: str):
        try:
            name, groups = self._route(method)
            if name == "create":
                body = self._body()
                scenario = body.get("scenario_id")
                if not scenario:
                    raise BadRequest("scenario_id is required")
                self._reply(201, self.service.create(str(scenario)))
            elif name == "state":
                self._reply(200, self.service.snapshot(groups[0]))
            elif name == "proposals":
                q = self._query()
                self._reply(200, self.service.proposals(groups[0], int(q.get("k", DEFAULT_K))))
            elif name == "choose":
                body = self._body()
                if "index" not in body or "step" not in body:
                    raise BadRequest("choose requires index and step")
                self._reply(
                    200,
                    self.service.choose(
                        groups[0],
                        int(body["index"]),
                        int(body["step"]),
                        int(body.get("k", DEFAULT_K)),
                    ),
                )
            elif name == "reset":
                self._reply(200, self.service.reset(groups[0]))
            elif name == "events":
                q = self._query()
                cursor = int(q.get("cursor", 0))
                timeout = min(float(q.get("timeout", EVENT_POLL_TIMEOUT)), 120.0)
                self._reply(200, self.service.events(groups[0], cursor, timeout))
            elif name == "scenarios":
                self._reply(200, {"scenarios": self.service.scenarios()})
        except ApiError as exc:
            self._reply(exc.status, {"error": exc.message})
        except ValueError as exc:
            self._reply(400, {"error": str(exc)})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def make_server(weights: np.ndarray, corpus: list[Sequence], port: int = 0) -> ThreadingHTTPServer:
    """Bound but not yet serving; call serve_forever() or shut down in tests."""
    service = SessionService(weights, corpus)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    server.service = service
    return server


def serve(weights: np.ndarray, corpus: list[Sequence], port: int) -> None:
    server = make_server(weights, corpus, port)
    host, bound_port = server.server_address
    print(f"serving on http://{host}:{bound_port}", flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
