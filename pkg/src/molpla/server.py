"""HTTP JSON API serving the interactive lead-optimization workflow.

Stdlib threading server over immutable model/library state: every endpoint
is a pure function of its request body given the loaded artifacts, so
concurrent requests behave exactly like serial ones. Per-session histories
are the only mutable state (append-only, guarded by a lock). Errors are
structured objects and never leak stack traces.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .canon import canonical_key
from .decompose import NoRingError, decompose, enumerate_putative_cores, identify_rgroups
from .encoder import EncoderConfig, ParameterStore
from .graph import MolGraph
from .leadopt import (NoStubError, descriptor_delta, descriptor_report,
                      node_pca_coloring, reattach)
from .patterns import PatternRegistry, bits_to_string, default_registry, string_to_bits
from .retrieval import NotAStubError, RGroupLibrary, retrieve
from .smiles import SmilesSyntaxError, ValenceError, parse_smiles, write_smiles

log = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class SessionState:
    history: list[dict] = field(default_factory=list)


@dataclass
class AppState:
    params: ParameterStore
    config: EncoderConfig
    library: RGroupLibrary
    registry: PatternRegistry
    checkpoint_hash: str = ""
    library_hash: str = ""
    dataset_hash: str = ""
    ui_dir: Path | None = None
    sessions: dict[str, SessionState] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def rgroup_smiles(self, key: str) -> str:
        idx = self.library.index_of(key)
        if idx is None:
            raise ApiError(400, "unknown_key", f"R-group key not in library: {key}")
        return self.library.smiles[idx]


def _parse_mol(text) -> MolGraph:
    if not isinstance(text, str) or not text:
        raise ApiError(400, "bad_request", "field 'smiles' must be a non-empty string")
    try:
        return parse_smiles(text)
    except (SmilesSyntaxError, ValenceError) as exc:
        raise ApiError(400, "bad_smiles", str(exc))


def _condition_from(body: dict, state: AppState) -> np.ndarray:
    if "condition_bits" in body and body["condition_bits"]:
        bits = string_to_bits(body["condition_bits"])
        if bits.size != 64:
            raise ApiError(400, "bad_condition", "condition_bits must be 64 chars")
        return bits
    names = body.get("condition", [])
    if not isinstance(names, list):
        raise ApiError(400, "bad_condition", "condition must be a list of names")
    try:
        return state.registry.resolve(names)
    except KeyError as exc:
        raise ApiError(400, "bad_condition", str(exc))


def _check_hashes(body: dict, state: AppState) -> None:
    expect_lib = body.get("expect_library_hash")
    if expect_lib and expect_lib != state.library_hash:
        raise ApiError(409, "library_mismatch",
                       f"server library hash is {state.library_hash}")
    expect_ck = body.get("expect_checkpoint_hash")
    if expect_ck and expect_ck != state.checkpoint_hash:
        raise ApiError(409, "checkpoint_mismatch",
                       f"server checkpoint hash is {state.checkpoint_hash}")


def _record_session(state: AppState, body: dict, kind: str, payload: dict) -> None:
    session_id = body.get("session")
    if not session_id:
        return
    with state.lock:
        sess = state.sessions.setdefault(str(session_id), SessionState())
        sess.history.append({"kind": kind, "request": body, "response": payload})


# ---------------------------------------------------------------------------
# endpoint handlers (pure given state)
# ---------------------------------------------------------------------------

def handle_parse(state: AppState, body: dict) -> dict:
    g = _parse_mol(body.get("smiles"))
    return {
        "graph": g.to_obj(),
        "smiles": write_smiles(g),
        "canonical_key": canonical_key(g),
        "descriptors": descriptor_report(g),
        "stub_indices": g.stub_indices(),
    }


def handle_color(state: AppState, body: dict) -> dict:
    g = _parse_mol(body.get("smiles"))
    if g.n_atoms < 2:
        raise ApiError(400, "too_small", "coloring needs at least two atoms")
    coloring = node_pca_coloring(g, state.params, state.config)
    return {
        "graph": g.to_obj(),
        "scores": [float(s) for s in coloring.scores],
        "eigenvalue": coloring.eigenvalue,
        "converged": coloring.converged,
    }


def handle_decompose(state: AppState, body: dict) -> dict:
    g = _parse_mol(body.get("smiles"))
    if not g.is_connected():
        raise ApiError(400, "disconnected", "decomposition needs a connected molecule")
    try:
        cores = enumerate_putative_cores(g)
    except NoRingError as exc:
        raise ApiError(400, "no_ring", str(exc))
    core_index = int(body.get("core_index", 0))
    if not 0 <= core_index < len(cores):
        raise ApiError(400, "bad_core_index",
                       f"core_index must be in [0, {len(cores)})")
    cores_out = []
    for cg, atoms in cores:
        cores_out.append({"smiles": write_smiles(cg),
                          "atom_indices": sorted(atoms),
                          "n_branches": len(identify_rgroups(g, atoms))})
    _, core_atoms = cores[core_index]
    branches = identify_rgroups(g, core_atoms)
    branch_out = []
    for bi, (atoms, (u, v)) in enumerate(branches):
        inst = decompose(g, core_atoms, {bi}, branches=branches,
                         core_id=core_index, subset_id=1 << bi)
        obj = inst.to_obj()
        rg = inst.rgroups[0]
        bits = state.registry.condition_vector(rg)
        names = [state.registry.entries[i].name for i in range(bits.size)
                 if bits[i]]
        branch_out.append({
            "branch_index": bi,
            "cut": [u, v],
            "rgroup_smiles": obj["rgroups"][0],
            "rgroup_key": canonical_key(rg),
            "query_smiles": obj["query"],
            "stub_index": obj["linker_map"][0][1],
            "condition_names": names,
            "condition_bits": bits_to_string(bits),
        })
    payload = {"cores": cores_out, "core_index": core_index,
               "branches": branch_out}
    _record_session(state, body, "decompose", payload)
    return payload


def handle_retrieve(state: AppState, body: dict) -> dict:
    _check_hashes(body, state)
    g = _parse_mol(body.get("template_smiles"))
    stub = body.get("stub_index")
    if not isinstance(stub, int):
        raise ApiError(400, "bad_request", "stub_index must be an integer")
    condition = _condition_from(body, state)
    k = int(body.get("k", 100))
    if k < 0:
        raise ApiError(400, "bad_request", "k must be >= 0")
    try:
        result = retrieve(g, stub, condition, state.library, state.params,
                          state.config, k=k)
    except NotAStubError as exc:
        raise ApiError(400, "not_a_stub", str(exc))
    smiles_of = dict(zip(state.library.keys, state.library.smiles))
    payload = {
        "results": [{"key": key, "smiles": smiles_of[key], "score": score}
                    for key, score in result.ranked],
        "condition_bits": result.condition,
        "k": k,
    }
    _record_session(state, body, "retrieve", payload)
    return payload


def handle_reattach(state: AppState, body: dict) -> dict:
    _check_hashes(body, state)
    g = _parse_mol(body.get("template_smiles"))
    stub = body.get("stub_index")
    if not isinstance(stub, int):
        raise ApiError(400, "bad_request", "stub_index must be an integer")
    if body.get("rgroup_key"):
        rg_smiles = state.rgroup_smiles(body["rgroup_key"])
        key = body["rgroup_key"]
    elif body.get("rgroup_smiles"):
        rg_smiles = body["rgroup_smiles"]
        key = ""
    else:
        raise ApiError(400, "bad_request",
                       "need rgroup_key or rgroup_smiles")
    rg = _parse_mol(rg_smiles)
    try:
        candidates = reattach(g, stub, rg, rgroup_key=key)
    except NoStubError as exc:
        raise ApiError(400, "no_stub", str(exc))
    before = None
    if body.get("original_smiles"):
        before = descriptor_report(_parse_mol(body["original_smiles"]))
    out = []
    for cand in candidates:
        desc = descriptor_report(cand.molecule)
        out.append({
            "smiles": cand.smiles,
            "canonical_key": canonical_key(cand.molecule),
            "bond_type": cand.filled_bond.bond_type,
            "valid": cand.valid,
            "descriptors": desc,
            "descriptor_delta": (descriptor_delta(before, desc)
                                 if before else {}),
        })
    payload = {"candidates": out}
    _record_session(state, body, "reattach", payload)
    return payload


def handle_library_meta(state: AppState, body: dict) -> dict:
    return {
        "n_rgroups": state.library.size,
        "checkpoint_hash": state.checkpoint_hash,
        "library_hash": state.library_hash,
        "dataset_hash": state.dataset_hash,
        "registry_version": state.registry.version,
        "metadata": state.library.metadata,
    }


def handle_patterns(state: AppState, body: dict) -> dict:
    return state.registry.to_obj()


def handle_session(state: AppState, session_id: str) -> dict:
    with state.lock:
        sess = state.sessions.get(session_id)
        history = list(sess.history) if sess else []
    return {"session": session_id, "history": history}


_POST_ROUTES = {
    "/parse": handle_parse,
    "/color": handle_color,
    "/decompose": handle_decompose,
    "/retrieve": handle_retrieve,
    "/reattach": handle_reattach,
}
_GET_ROUTES = {
    "/library/meta": handle_library_meta,
    "/patterns": handle_patterns,
}

_STATIC_TYPES = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".map": "application/json",
                 ".svg": "image/svg+xml", ".json": "application/json"}


class _Handler(BaseHTTPRequestHandler):
    state: AppState  # injected by make_server

    def log_message(self, fmt, *args):  # quiet by default
        log.debug("http: " + fmt, *args)

    def _send_json(self, status: int, payload: dict) -> None:
        blob = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(blob)

    def _send_error_obj(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": {"code": code, "message": message}})

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?")[0]
        try:
            if path in _GET_ROUTES:
                self._send_json(200, _GET_ROUTES[path](self.state, {}))
            elif path.startswith("/session/"):
                self._send_json(200, handle_session(self.state, path[9:]))
            elif self.state.ui_dir is not None:
                self._send_static(path)
            else:
                self._send_error_obj(404, "not_found", f"no route {path}")
        except ApiError as exc:
            self._send_error_obj(exc.status, exc.code, exc.message)
        except Exception:
            log.exception("internal error on GET %s", path)
            self._send_error_obj(500, "internal", "internal server error")

    def _send_static(self, path: str) -> None:
        rel = "index.html" if path == "/" else path.lstrip("/")
        target = (self.state.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.state.ui_dir.resolve())) \
                or not target.is_file():
            self._send_error_obj(404, "not_found", f"no route {path}")
            return
        blob = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type",
                         _STATIC_TYPES.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def do_POST(self):
        path = self.path.split("?")[0]
        handler = _POST_ROUTES.get(path)
        if handler is None:
            self._send_error_obj(404, "not_found", f"no route {path}")
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw.decode() or "{}")
            except json.JSONDecodeError:
                raise ApiError(400, "bad_json", "request body is not valid JSON")
            if not isinstance(body, dict):
                raise ApiError(400, "bad_json", "request body must be an object")
            self._send_json(200, handler(self.state, body))
        except ApiError as exc:
            self._send_error_obj(exc.status, exc.code, exc.message)
        except Exception:
            log.exception("internal error on POST %s", path)
            self._send_error_obj(500, "internal", "internal server error")


def make_server(state: AppState, host: str = "127.0.0.1",
                port: int = 8731) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def load_state(checkpoint_path, library_path, dataset_dir=None,
               ui_dir=None) -> AppState:
    from .encoder import checkpoint_hash as ck_hash
    from .encoder import load_checkpoint
    from .retrieval import library_hash as lib_hash
    from .retrieval import load_library

    params, config, _ = load_checkpoint(checkpoint_path)
    library = load_library(library_path)
    dataset_hash = ""
    if dataset_dir is not None:
        from .dataset import dataset_hash as ds_hash
        dataset_hash = ds_hash(dataset_dir)
    return AppState(params=params, config=config, library=library,
                    registry=default_registry(),
                    checkpoint_hash=ck_hash(checkpoint_path),
                    library_hash=lib_hash(library_path),
                    dataset_hash=dataset_hash,
                    ui_dir=Path(ui_dir) if ui_dir else None)
