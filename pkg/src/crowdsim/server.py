"""TCP control service: external controllers subscribe to scans and pose
state and send velocity commands over newline-delimited JSON.

Realtime mode steps the engine at a wall-clock rate; lockstep mode steps
only on client request and acknowledges with `stepped` after publications,
which makes integration tests deterministic. The engine runs on one
thread; connection handlers only touch the command latch and subscription
registry, so per-session failures never corrupt a run.
"""

from __future__ import annotations

import queue
import socket
import threading
import time

from .engine import Engine, TrajectoryRecorder
from .errors import NotARobot, ProtocolError, UnknownRobot
from .protocol import (DEFAULT_PORT, PROTOCOL_VERSION, decode_message,
                       encode_message, error_message, scan_message,
                       state_message)
from .scenario import ScenarioSpec

MODES = ("realtime", "lockstep")


class _Session:
    def __init__(self, conn: socket.socket, addr):
        self.conn = conn
        self.addr = addr
        self.lock = threading.Lock()
        self.subscriptions: set[tuple[int, str]] = set()
        self.alive = True

    def send(self, msg: dict) -> bool:
        data = encode_message(msg)
        with self.lock:
            if not self.alive:
                return False
            try:
                self.conn.sendall(data)
                return True
            except OSError:
                self.alive = False
                return False

    def wants_state(self) -> bool:
        return any(topic == "state" for _, topic in self.subscriptions)

    def close(self):
        with self.lock:
            self.alive = False
            try:
                self.conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.conn.close()


class CrowdServer:
    """One scenario served on one port until shutdown."""

    def __init__(self, spec: ScenarioSpec, host: str = "127.0.0.1",
                 port: int = DEFAULT_PORT, mode: str = "lockstep",
                 rate_hz: float = 10.0, record_path: str | None = None,
                 max_steps: int | None = None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if rate_hz <= 0.0:
            raise ValueError("rate_hz must be positive")
        self.spec = spec
        self.mode = mode
        self.rate_hz = rate_hz
        self.max_steps = max_steps
        self.engine = Engine(spec)
        self._recorder = TrajectoryRecorder(record_path, self.engine) \
            if record_path else None
        self._robot_ids = set(self.engine.robot_ids())
        self._pending: dict[int, tuple[float, float]] = {}
        self._pending_lock = threading.Lock()
        self._steps: queue.Queue = queue.Queue()
        self._sessions: list[_Session] = []
        self._sessions_lock = threading.Lock()
        self._stop = threading.Event()
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._threads: list[threading.Thread] = []

    # -- lifecycle -----------------------------------------------------------

    def start(self):
        self._listener.listen()
        # periodic timeout lets the accept loop notice shutdown
        self._listener.settimeout(0.2)
        accept = threading.Thread(target=self._accept_loop, daemon=True,
                                  name="crowdsim-accept")
        engine = threading.Thread(target=self._engine_loop, daemon=True,
                                  name="crowdsim-engine")
        self._threads = [accept, engine]
        accept.start()
        engine.start()

    def wait(self):
        """Block until the engine loop finishes (shutdown or max_steps)."""
        self._threads[1].join()

    def shutdown(self):
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._sessions_lock:
            sessions = list(self._sessions)
        for s in sessions:
            s.close()
        for t in self._threads:
            t.join(timeout=5.0)
        if self._recorder:
            self._recorder.close()
            self._recorder = None

    # -- engine thread -------------------------------------------------------

    def _engine_loop(self):
        if self.mode == "realtime":
            period = 1.0 / self.rate_hz
            deadline = time.perf_counter() + period
            while not self._stop.is_set() and not self._done():
                now = time.perf_counter()
                if now < deadline:
                    time.sleep(min(deadline - now, 0.05))
                    continue
                deadline += period
                self._do_step()
        else:
            while not self._stop.is_set() and not self._done():
                try:
                    n, session = self._steps.get(timeout=0.1)
                except queue.Empty:
                    continue
                for _ in range(n):
                    if self._done():
                        break
                    self._do_step()
                session.send({"type": "stepped", "tick": self.engine.tick})
        self._stop.set()
        if self._recorder:
            self._recorder.close()
            self._recorder = None

    def _done(self) -> bool:
        return self.max_steps is not None and self.engine.tick >= self.max_steps

    def _do_step(self):
        with self._pending_lock:
            commands = self._pending
            self._pending = {}
        with self._sessions_lock:
            sessions = [s for s in self._sessions if s.alive]
        divisor = self.spec.config.laser.rate_divisor
        due_tick = self.engine.tick + 1
        scan_due = due_tick % divisor == 0
        wanted = sorted({rid for s in sessions for rid, topic in s.subscriptions
                         if topic == "scan"}) if scan_due else []
        _, scans = self.engine.step(commands=commands, scan_robots=wanted)
        if self._recorder:
            self._recorder.record()
        state = None
        for s in sessions:
            for rid, topic in sorted(s.subscriptions):
                if topic == "scan" and scan_due:
                    s.send(scan_message(scans[rid]))
            if s.wants_state():
                if state is None:
                    state = state_message(self.engine.snapshot())
                s.send(state)

    # -- connection handling --------------------------------------------------

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn.settimeout(None)
            session = _Session(conn, addr)
            with self._sessions_lock:
                self._sessions.append(session)
            t = threading.Thread(target=self._serve_session, args=(session,),
                                 daemon=True, name=f"crowdsim-client-{addr}")
            t.start()

    def _serve_session(self, session: _Session):
        try:
            with session.conn.makefile("rb") as reader:
                for line in reader:
                    if self._stop.is_set() or not session.alive:
                        break
                    if not line.strip():
                        continue
                    try:
                        msg = decode_message(line)
                    except ProtocolError as exc:
                        session.send(error_message("bad_message", str(exc)))
                        continue
                    if not self._dispatch(session, msg):
                        break
        except OSError:
            pass
        finally:
            session.close()
            with self._sessions_lock:
                if session in self._sessions:
                    self._sessions.remove(session)

    def _dispatch(self, session: _Session, msg: dict) -> bool:
        mtype = msg["type"]
        if mtype == "hello":
            if msg["version"] != PROTOCOL_VERSION:
                session.send(error_message(
                    "unsupported_version",
                    f"server speaks version {PROTOCOL_VERSION}"))
                return True
            session.send({"type": "welcome", "version": PROTOCOL_VERSION,
                          "scenario": self.spec.name, "dt": self.spec.config.dt,
                          "robots": sorted(self._robot_ids)})
            return True
        if mtype == "subscribe":
            rid = msg["robot_id"]
            if rid not in self._robot_ids:
                session.send(error_message("unknown_robot",
                                           f"no robot with id {rid}"))
                return True
            session.subscriptions.add((rid, msg["topic"]))
            return True
        if mtype == "cmd_vel":
            rid = msg["robot_id"]
            if rid not in self._robot_ids:
                session.send(error_message("unknown_robot",
                                           f"no robot with id {rid}"))
                return True
            with self._pending_lock:
                self._pending[rid] = (msg["linear"], msg["angular"])
            return True
        if mtype == "step":
            if self.mode != "lockstep":
                session.send(error_message("not_lockstep",
                                           "step is only valid in lockstep mode"))
                return True
            if msg["n"] < 1:
                session.send(error_message("bad_request", "n must be >= 1"))
                return True
            self._steps.put((msg["n"], session))
            return True
        if mtype == "bye":
            return False
        # server does not accept server->client message types
        session.send(error_message("bad_request",
                                   f"unexpected message type {mtype!r}"))
        return True


def serve(spec: ScenarioSpec, port: int = DEFAULT_PORT, mode: str = "lockstep",
          host: str = "127.0.0.1", rate_hz: float = 10.0,
          record_path: str | None = None, max_steps: int | None = None,
          announce=None) -> None:
    """Run a server until shutdown (Ctrl-C) or `max_steps` ticks."""
    server = CrowdServer(spec, host=host, port=port, mode=mode, rate_hz=rate_hz,
                         record_path=record_path, max_steps=max_steps)
    server.start()
    if announce is not None:
        announce(server)
    try:
        server.wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
