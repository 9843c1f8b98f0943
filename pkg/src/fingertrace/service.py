"""JSON-over-HTTP design service backing the explorer UI.

The scene is an immutable snapshot swapped atomically on PUT, so any
number of trace requests can read concurrently while replacement stays
exclusive.  At most one optimization job runs at a time; extra requests
get 409.  Trace responses embed the exact CSV/summary payloads the
`trace` CLI writes, so both front ends are numerically identical by
construction.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import __version__
from .cli import DEFAULT_OPT_PIXELS, _trace_payload
from .config import (
    ConfigError,
    ConfigSyntaxError,
    SceneConfig,
    config_with_design,
    emit_config,
    parse_config,
)
from .designopt import (
    DesignObjective,
    design_vector_from_scene,
    optimize,
    scene_with_design,
    score_components,
)
from .scene import SkinHit, Terminal

log = logging.getLogger("fingertrace.service")

__all__ = ["DesignService", "run_server", "make_server"]


class _OptimizeJob:
    def __init__(self, job_id: str, budget: int, seed: int, pixels: int):
        self.job_id = job_id
        self.budget = budget
        self.seed = seed
        self.pixels = pixels
        self.status = "running"
        self.error = ""
        self.history: list = []
        self.best_config_text = ""
        self.initial_score = float("nan")
        self.final_score = float("nan")


class DesignService:
    """State shared by all request handler threads."""

    def __init__(self, cfg: SceneConfig):
        self._write_lock = threading.Lock()
        self._job_lock = threading.Lock()
        self.config = cfg
        self.jobs: dict[str, _OptimizeJob] = {}
        self.active_job: str = ""

    # -- scene resource ----------------------------------------------------

    def scene_text(self) -> str:
        return emit_config(self.config)

    def replace_scene(self, text: str):
        cfg = parse_config(text)  # raises ConfigError
        with self._write_lock:
            self.config = cfg

    def trace_response(self) -> dict:
        cfg = self.config  # atomic snapshot of the immutable config
        scene, traces, metrics, table, summary = _trace_payload(cfg)
        rays = []
        for tr in traces:
            if isinstance(tr.terminal, SkinHit):
                terminal = "skin_hit"
            else:
                terminal = tr.terminal.value
            rays.append({
                "pixel_index": tr.pixel_index,
                "terminal": terminal,
                "points": [[n.point.x, n.point.y] for n in tr.path],
            })
        # Server-rendered geometry so the UI never evaluates splines itself.
        surfaces = []
        movable_surface_indices = []
        for i, (surf, spec) in enumerate(zip(scene.surfaces[1 if cfg.dome_radius else 0:],
                                             cfg.surfaces)):
            movable = (spec.kind == "reflective" and spec.shape.type == "bspline"
                       and spec.shape.degree >= 2)
            if movable:
                movable_surface_indices.append(i)
            surfaces.append(_surface_payload(surf.geometry, spec.kind, spec.name, movable))
        if cfg.dome_radius is not None:
            surfaces.insert(0, _surface_payload(scene.surfaces[0].geometry,
                                                "refractive", "air_gel_dome", False))
        skin = _surface_payload(scene.skin, "absorbing", "skin",
                                cfg.skin.type == "bspline")
        return {
            "metrics_csv": table.decode("ascii"),
            "summary": summary,
            "rays": rays,
            "surfaces": surfaces,
            "skin": skin,
            "camera": {"pinhole": [scene.camera.pinhole.x, scene.camera.pinhole.y]},
            "envelope": [scene.envelope[0], scene.envelope[1]],
            "fixed_mask": list(design_vector_from_scene(scene).fixed),
        }

    # -- optimization jobs ---------------------------------------------------

    def start_optimize(self, budget: int, seed: int, pixels: int) -> str:
        with self._job_lock:
            if self.active_job and self.jobs[self.active_job].status == "running":
                raise ConflictError("an optimization job is already running")
            job = _OptimizeJob(uuid.uuid4().hex[:12], budget, seed, pixels)
            self.jobs[job.job_id] = job
            self.active_job = job.job_id
        cfg = self.config
        thread = threading.Thread(target=self._run_job, args=(job, cfg), daemon=True)
        thread.start()
        return job.job_id

    def _run_job(self, job: _OptimizeJob, cfg: SceneConfig):
        try:
            eval_cfg = dataclasses.replace(cfg, pixel_count=job.pixels)
            base_scene = eval_cfg.build()
            objective = DesignObjective(max_length=cfg.envelope_length,
                                        max_width=cfg.envelope_width)
            initial = design_vector_from_scene(base_scene)
            if job.budget < len(initial.free_indices) + 1:
                raise ValueError(
                    f"budget must be at least {len(initial.free_indices) + 1}")
            job.initial_score = score_components(initial, base_scene, objective).score
            best, history = optimize(initial, base_scene, objective, job.budget,
                                     seed=job.seed)
            job.history = history
            job.final_score = score_components(best, base_scene, objective).score
            best_cfg = config_with_design(cfg, scene_with_design(base_scene, best))
            job.best_config_text = emit_config(best_cfg)
            job.status = "done"
        except Exception as e:  # job errors surface through polling, not a crash
            job.error = str(e)
            job.status = "failed"

    def job_response(self, job_id: str) -> dict:
        job = self.jobs.get(job_id)
        if job is None:
            raise KeyError(job_id)
        out = {
            "job_id": job.job_id,
            "status": job.status,
            "budget": job.budget,
            "seed": job.seed,
            "history": [[h.evaluation, h.score, h.coverage, h.min_angle_deg]
                        for h in job.history],
        }
        if job.status == "done":
            out["best_config"] = job.best_config_text
            out["initial_score"] = job.initial_score
            out["final_score"] = job.final_score
        if job.status == "failed":
            out["error"] = job.error
        return out


class ConflictError(RuntimeError):
    pass


def _surface_payload(geom, kind: str, name: str, movable: bool) -> dict:
    import math

    from .geometry import BSplineCurve, CircularArc
    if isinstance(geom, CircularArc):
        n = 72
        pts = [[geom.center.x + geom.radius * math.cos(a),
                geom.center.y + geom.radius * math.sin(a)]
               for a in (geom.start_angle + geom.span * i / (n - 1) for i in range(n))]
        ctrl = None
    else:
        lo, hi = geom.domain
        pts = [[float(x), float(y)] for x, y in
               geom.evaluate_many([lo + (hi - lo) * i / 119 for i in range(120)])]
        ctrl = [[p.x, p.y] for p in geom.control_points]
    return {"name": name, "kind": kind, "points": pts,
            "control_points": ctrl, "movable": movable}


class _Handler(BaseHTTPRequestHandler):
    service: DesignService  # set on the subclass by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, code: int, payload, content_type="application/json"):
        body = payload if isinstance(payload, bytes) else (
            json.dumps(payload, sort_keys=True) + "\n").encode("ascii")
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> str:
        length = int(self.headers.get("Content-Length", "0") or "0")
        return self.rfile.read(length).decode("utf-8")

    def do_GET(self):
        if self.path == "/api/health":
            self._send(200, {"status": "ok", "version": __version__})
        elif self.path == "/api/scene":
            self._send(200, self.service.scene_text().encode("ascii"))
        elif self.path.startswith("/api/optimize/"):
            job_id = self.path.rsplit("/", 1)[-1]
            try:
                self._send(200, self.service.job_response(job_id))
            except KeyError:
                self._send(404, {"error": f"unknown job {job_id!r}"})
        else:
            self._send(404, {"error": f"no such resource {self.path!r}"})

    def do_PUT(self):
        if self.path != "/api/scene":
            self._send(404, {"error": f"no such resource {self.path!r}"})
            return
        try:
            self.service.replace_scene(self._body())
        except ConfigSyntaxError as e:
            self._send(400, {"error": str(e)})
            return
        except ConfigError as e:
            self._send(422, {"error": str(e), "field": e.path})
            return
        self._send(200, {"status": "ok"})

    def do_POST(self):
        if self.path == "/api/trace":
            self._send(200, self.service.trace_response())
        elif self.path == "/api/optimize":
            raw = self._body()
            try:
                params = json.loads(raw) if raw.strip() else {}
                if not isinstance(params, dict):
                    raise ValueError("body must be a JSON object")
                budget = int(params.get("budget", 500))
                seed = int(params.get("seed", 0))
                pixels = int(params.get("pixels", DEFAULT_OPT_PIXELS))
            except (json.JSONDecodeError, ValueError, TypeError) as e:
                self._send(400, {"error": f"malformed request: {e}"})
                return
            try:
                job_id = self.service.start_optimize(budget, seed, pixels)
            except ConflictError as e:
                self._send(409, {"error": str(e)})
                return
            self._send(202, {"job_id": job_id})
        else:
            self._send(404, {"error": f"no such resource {self.path!r}"})


def make_server(cfg: SceneConfig, port: int = 0) -> ThreadingHTTPServer:
    """Bound but not yet serving; port 0 picks a free one (for tests)."""
    service = DesignService(cfg)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def run_server(cfg: SceneConfig, port: int):
    server = make_server(cfg, port)
    host, bound_port = server.server_address
    print(f"serving on http://{host}:{bound_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
