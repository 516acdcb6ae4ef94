"""HTTP session service for human-in-the-loop runs.

Each session owns one interactive run executing on a worker thread. The
run blocks inside the decision-maker rendezvous whenever a pairwise query
is pending; the companion UI polls the query endpoint, renders the two
candidate layouts, and posts the verdict, which releases the worker.
Sessions are in-memory; the comparison log can optionally be persisted as
JSON lines and replayed into a fresh run with a matching seed.
"""

from __future__ import annotations

import json
import threading
import uuid
from hashlib import sha256
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .algorithms import RunConfig, run_nemo2ch
from .dm import InteractiveDm, RunCancelled
from .errors import PreflocError, ValidationError
from .instance import (
    GeneratorConfig,
    Instance,
    Solution,
    compute_bounds,
    generate_instance,
    instance_from_dict,
)
from .numerics import SimplexSearchConfig

RUNNING = "running"
AWAITING = "awaiting_answer"
PAUSED = "paused"
FINISHED = "finished"
FAILED = "failed"

_VERDICTS = ("left", "right", "indifferent")


def _instance_hash(inst: Instance) -> str:
    doc = json.dumps(inst.to_dict(), sort_keys=True)
    return sha256(doc.encode("utf-8")).hexdigest()[:16]


def _solution_payload(inst: Instance, solution: Solution, objectives, normalized) -> dict:
    return {
        "sites": list(solution.sites),
        "coords": [[inst.sites[s - 1].x, inst.sites[s - 1].y] for s in solution.sites],
        "objectives": {
            "f1": objectives.f1,
            "f2": objectives.f2,
            "f3": objectives.f3,
            "f4": objectives.f4,
            "f5": objectives.f5,
        },
        "normalized": list(normalized),
    }


class Session:
    def __init__(self, sid: str, inst: Instance, cfg: RunConfig, dm: InteractiveDm,
                 log_path: Path | None):
        self.id = sid
        self.instance = inst
        self.cfg = cfg
        self.dm = dm
        self.log_path = log_path
        self.lock = threading.Lock()
        self.state = RUNNING
        self.pending: dict | None = None
        self.history: list[dict] = []
        self.generation = 0
        self.model_kind = "linear"
        self.comparisons = 0
        self.escalations = 0
        self.repairs = 0
        self.fronts: list[list[dict]] = []
        self.best: dict | None = None
        self.record = None
        self.error: str | None = None
        self.thread: threading.Thread | None = None

    # --- callbacks wired into the run (worker thread) ---

    def on_query(self, context) -> None:
        from .objectives import normalize

        with self.lock:
            self.pending = {
                "query_id": f"g{context.generation}",
                "generation": context.generation,
                "model": context.model_kind,
                "left": _solution_payload(
                    self.instance, context.left_solution,
                    context.left_objectives, context.left_normalized,
                ),
                "right": _solution_payload(
                    self.instance, context.right_solution,
                    context.right_objectives, context.right_normalized,
                ),
            }
            self.model_kind = context.model_kind
            self.state = AWAITING

    def on_pause(self) -> None:
        with self.lock:
            if self.state == AWAITING:
                self.state = PAUSED

    def on_resume(self) -> None:
        with self.lock:
            if self.state == PAUSED:
                self.state = RUNNING

    def on_event(self, event: str, payload: dict) -> None:
        if event == "generation":
            pop = payload["pop"]
            state = payload["state"]
            fronts: dict[int, list[dict]] = {}
            for ind in pop:
                from .objectives import normalize

                norm = normalize(ind.objectives, self.cfg.bounds).as_tuple()
                fronts.setdefault(ind.front, []).append(
                    _solution_payload(self.instance, ind.solution, ind.objectives, norm)
                )
            with self.lock:
                self.generation = payload["generation"]
                self.fronts = [fronts[k] for k in sorted(fronts)]
                self.best = self.fronts[0][0] if self.fronts else None
                self.comparisons = state.comparisons
                self.escalations = state.escalations
                self.repairs = state.repairs
                self.model_kind = state.model_kind
        elif event == "finished":
            with self.lock:
                self.record = payload["record"]

    # --- log persistence ---

    def write_log_header(self) -> None:
        if self.log_path is None:
            return
        header = {
            "type": "header",
            "seed": self.cfg.seed,
            "p": self.cfg.p,
            "interaction_period": self.cfg.interaction_period,
            "pop_size": self.cfg.pop_size,
            "max_generations": self.cfg.max_generations,
            "instance_hash": _instance_hash(self.instance),
        }
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.log_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")

    def append_log(self, entry: dict) -> None:
        if self.log_path is None:
            return
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


class SessionManager:
    def __init__(self, log_dir: str | None, max_sessions: int):
        self.log_dir = Path(log_dir) if log_dir else None
        self.max_sessions = max_sessions
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def create(self, payload: dict) -> Session:
        with self.lock:
            if len(self.sessions) >= self.max_sessions:
                raise CapacityError(f"session capacity {self.max_sessions} reached")
        inst = self._build_instance(payload)
        p = int(payload.get("p", 2))
        seed = int(payload.get("seed", 0))
        bounds = compute_bounds(inst, p, payload.get("bounds_method", "exhaustive"))
        pb = None
        if payload.get("pb") is not None:
            pb = Solution(tuple(int(s) for s in payload["pb"]))
            inst.validate_solution(pb, p)

        sid = uuid.uuid4().hex[:12]
        log_path = self.log_dir / f"{sid}.jsonl" if self.log_dir else None
        dm = InteractiveDm(timeout=float(payload.get("answer_timeout", 3600.0)))
        cfg = RunConfig(
            algorithm="nemo2ch",
            p=p,
            seed=seed,
            dm=dm,
            bounds=bounds,
            pb=pb,
            interaction_period=int(payload.get("interaction_period", 10)),
            max_generations=int(payload.get("max_generations", 1000)),
            pop_size=int(payload.get("pop_size", 30)),
            search=SimplexSearchConfig(),
        )
        session = Session(sid, inst, cfg, dm, log_path)
        dm._on_query = session.on_query
        dm._on_pause = session.on_pause
        dm._on_resume = session.on_resume
        cfg.observer = session.on_event

        if payload.get("resume_session_id"):
            dm.replay = self._load_replay(payload["resume_session_id"], session)
        session.write_log_header()

        with self.lock:
            if len(self.sessions) >= self.max_sessions:
                raise CapacityError(f"session capacity {self.max_sessions} reached")
            self.sessions[sid] = session
        thread = threading.Thread(target=self._work, args=(session,), daemon=True)
        session.thread = thread
        thread.start()
        return session

    def _build_instance(self, payload: dict) -> Instance:
        if payload.get("instance") is not None:
            return instance_from_dict(payload["instance"])
        gen = payload.get("generator")
        if not gen:
            raise ValidationError("give either an inline instance or generator parameters")
        spec = GeneratorConfig(
            scale=float(gen.get("scale", 100.0)),
            pop_low=int(gen.get("pop_low", 1)),
            pop_high=int(gen.get("pop_high", 100)),
            s1=gen.get("s1"),
            s2=gen.get("s2"),
        )
        return generate_instance(int(gen["q"]), int(gen["m"]), int(gen["seed"]), spec)

    def _load_replay(self, old_id: str, session: Session) -> list[str]:
        if self.log_dir is None:
            raise ValidationError("persistence is not enabled on this service")
        path = self.log_dir / f"{old_id}.jsonl"
        if not path.exists():
            raise ValidationError(f"no log for session {old_id}")
        with open(path, "r", encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or lines[0].get("type") != "header":
            raise ValidationError(f"log for session {old_id} has no header")
        header = lines[0]
        current = {
            "seed": session.cfg.seed,
            "p": session.cfg.p,
            "interaction_period": session.cfg.interaction_period,
            "pop_size": session.cfg.pop_size,
            "max_generations": session.cfg.max_generations,
            "instance_hash": _instance_hash(session.instance),
        }
        mismatched = [k for k, v in current.items() if header.get(k) != v]
        if mismatched:
            raise ResumeRefused(f"resume refused, mismatched fields: {mismatched}")
        return [row["verdict"] for row in lines[1:] if row.get("type") == "answer"]

    def _work(self, session: Session) -> None:
        try:
            record = run_nemo2ch(session.instance, session.cfg)
            with session.lock:
                session.record = record
                session.pending = None
                session.state = FINISHED
        except RunCancelled:
            with session.lock:
                session.state = FAILED
                session.error = "cancelled"
        except Exception as exc:  # surfaced through get_state, never silent
            with session.lock:
                session.state = FAILED
                session.error = f"{type(exc).__name__}: {exc}"

    def get(self, sid: str) -> Session | None:
        with self.lock:
            return self.sessions.get(sid)

    def delete(self, sid: str) -> bool:
        with self.lock:
            session = self.sessions.pop(sid, None)
        if session is None:
            return False
        session.dm.cancel()
        if session.thread is not None:
            session.thread.join(timeout=5.0)
        return True


class CapacityError(PreflocError):
    pass


class ResumeRefused(PreflocError):
    pass


def create_app(log_dir: str | None = None, ui_dir: str | None = None,
               max_sessions: int = 32) -> FastAPI:
    app = FastAPI(title="prefloc session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    manager = SessionManager(log_dir, max_sessions)
    app.state.manager = manager

    def _not_found() -> JSONResponse:
        return JSONResponse({"error": "unknown session"}, status_code=404)

    @app.post("/sessions")
    def create_session(payload: dict):
        try:
            session = manager.create(payload)
        except CapacityError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except ResumeRefused as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except (ValidationError, KeyError, TypeError, ValueError) as exc:
            return JSONResponse({"error": f"invalid session payload: {exc}"}, status_code=400)
        return JSONResponse(
            {
                "id": session.id,
                "instance": session.instance.to_dict(),
                "p": session.cfg.p,
                "seed": session.cfg.seed,
                "interaction_period": session.cfg.interaction_period,
                "pop_size": session.cfg.pop_size,
                "max_generations": session.cfg.max_generations,
            },
            status_code=201,
        )

    @app.get("/sessions/{sid}/query")
    def get_query(sid: str):
        session = manager.get(sid)
        if session is None:
            return _not_found()
        with session.lock:
            if session.state in (AWAITING, PAUSED) and session.pending is not None:
                return {"pending": True, **session.pending}
            payload = {"pending": False, "state": session.state}
            if session.state == FINISHED:
                payload["result"] = f"/sessions/{sid}/result"
            return payload

    @app.post("/sessions/{sid}/answer")
    def post_answer(sid: str, payload: dict):
        session = manager.get(sid)
        if session is None:
            return _not_found()
        verdict = payload.get("verdict")
        if verdict not in _VERDICTS:
            return JSONResponse({"error": f"verdict must be one of {_VERDICTS}"}, status_code=400)
        with session.lock:
            if session.pending is None:
                return JSONResponse({"error": "no pending query"}, status_code=409)
            query_id = payload.get("query_id")
            if query_id is not None and query_id != session.pending["query_id"]:
                return JSONResponse({"error": "stale query id"}, status_code=409)
            entry = {
                "type": "answer",
                "seq": len(session.history) + 1,
                "query_id": session.pending["query_id"],
                "generation": session.pending["generation"],
                "left": session.pending["left"]["sites"],
                "right": session.pending["right"]["sites"],
                "verdict": verdict,
            }
            session.history.append(entry)
            session.pending = None
            session.state = RUNNING
        session.append_log(entry)
        session.dm.post_answer(verdict)
        return {"state": RUNNING, "answered": entry["query_id"]}

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str):
        session = manager.get(sid)
        if session is None:
            return _not_found()
        with session.lock:
            return {
                "state": session.state,
                "generation": session.generation,
                "model": session.model_kind,
                "comparisons": session.comparisons,
                "escalations": session.escalations,
                "repairs": session.repairs,
                "fronts": session.fronts,
                "front_sizes": [len(f) for f in session.fronts],
                "best": session.best,
                "error": session.error,
            }

    @app.get("/sessions/{sid}/result")
    def get_result(sid: str):
        session = manager.get(sid)
        if session is None:
            return _not_found()
        with session.lock:
            if session.state != FINISHED or session.record is None:
                return JSONResponse(
                    {"error": "run not finished", "state": session.state}, status_code=409
                )
            doc = session.record.canonical_dict()
            doc["wall_time"] = session.record.wall_time
            doc["history"] = session.history
            return doc

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str):
        if not manager.delete(sid):
            return _not_found()
        return Response(status_code=204)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
