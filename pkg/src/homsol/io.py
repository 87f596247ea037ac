"""JSON documents, validation, and machine-readable reports.

Document schema (strict): a JSON object with keys exactly

    name    string
    dim     int, = dim_k + dim_h + dim_n
    dim_k, dim_h, dim_n   ints >= 0
    bracket list of {"i": int, "j": int, "k": int, "c": number}, i < j
    ip      optional (dim_h+dim_n) x (dim_h+dim_n) symmetric matrix
    meta    optional free-form object

Reports are deterministic: identical input and configuration produce
byte-identical JSON (sorted keys, no timestamps, input content hash).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import catalog as _catalog
from .decomposition import DecompositionError, MetricDecomposition
from .tensor import AlgebraTensor

TOOL_VERSION = "0.1.0"

REQUIRED_KEYS = {"name", "dim", "dim_k", "dim_h", "dim_n", "bracket"}
ALLOWED_KEYS = REQUIRED_KEYS | {"ip", "meta"}


class DocumentError(ValueError):
    def __init__(self, code: str, detail: str):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}")


@dataclass
class AlgebraDocument:
    name: str
    dim: int
    dim_k: int
    dim_h: int
    dim_n: int
    bracket: list[dict]
    ip: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def tensor(self) -> AlgebraTensor:
        entries = tuple((e["i"], e["j"], e["k"], e["c"]) for e in self.bracket)
        return AlgebraTensor(self.dim, entries)

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "dim": self.dim,
            "dim_k": self.dim_k,
            "dim_h": self.dim_h,
            "dim_n": self.dim_n,
            "bracket": [
                {"i": int(e["i"]), "j": int(e["j"]), "k": int(e["k"]), "c": float(e["c"])}
                for e in self.bracket
            ],
        }
        if self.ip is not None:
            out["ip"] = [[float(x) for x in row] for row in np.asarray(self.ip)]
        if self.meta:
            out["meta"] = self.meta
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    def content_hash(self) -> str:
        payload = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def document_from_dict(raw: dict) -> AlgebraDocument:
    if not isinstance(raw, dict):
        raise DocumentError("not-an-object", "top level must be a JSON object")
    keys = set(raw)
    extra = keys - ALLOWED_KEYS
    if extra:
        raise DocumentError("unknown-keys", f"unexpected keys {sorted(extra)}")
    missing = REQUIRED_KEYS - keys
    if missing:
        raise DocumentError("missing-keys", f"missing keys {sorted(missing)}")
    dims = {}
    for key in ("dim", "dim_k", "dim_h", "dim_n"):
        v = raw[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise DocumentError("bad-dimension", f"{key} must be a nonnegative integer")
        dims[key] = v
    if dims["dim"] != dims["dim_k"] + dims["dim_h"] + dims["dim_n"]:
        raise DocumentError("dimension-sum", "dim must equal dim_k + dim_h + dim_n")
    if not isinstance(raw["bracket"], list):
        raise DocumentError("bad-bracket", "bracket must be a list")
    bracket = []
    for pos, e in enumerate(raw["bracket"]):
        if not isinstance(e, dict) or set(e) != {"i", "j", "k", "c"}:
            raise DocumentError("bad-bracket-entry", f"entry {pos} must have keys i, j, k, c")
        i, j, k, c = e["i"], e["j"], e["k"], e["c"]
        for idx in (i, j, k):
            if not isinstance(idx, int) or isinstance(idx, bool):
                raise DocumentError("bad-bracket-entry", f"entry {pos}: indices must be integers")
            if not 0 <= idx < dims["dim"]:
                raise DocumentError("index-out-of-range", f"entry {pos}: index {idx} out of range")
        if not i < j:
            raise DocumentError("bad-bracket-entry", f"entry {pos}: requires i < j")
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not np.isfinite(c):
            raise DocumentError("bad-bracket-entry", f"entry {pos}: c must be a finite number")
        bracket.append({"i": i, "j": j, "k": k, "c": float(c)})
    ip = None
    if "ip" in raw:
        dp = dims["dim_h"] + dims["dim_n"]
        try:
            ip = np.asarray(raw["ip"], dtype=float)
        except (TypeError, ValueError) as err:
            raise DocumentError("bad-ip", f"ip is not a numeric matrix: {err}") from None
        if ip.shape != (dp, dp):
            raise DocumentError("bad-ip", f"ip must be {dp}x{dp}, got {ip.shape}")
    meta = raw.get("meta", {})
    if not isinstance(meta, dict):
        raise DocumentError("bad-meta", "meta must be an object")
    name = raw["name"]
    if not isinstance(name, str):
        raise DocumentError("bad-name", "name must be a string")
    return AlgebraDocument(
        name=name,
        dim=dims["dim"],
        dim_k=dims["dim_k"],
        dim_h=dims["dim_h"],
        dim_n=dims["dim_n"],
        bracket=bracket,
        ip=ip,
        meta=meta,
    )


def document_from_catalog(entry: "_catalog.CatalogEntry") -> AlgebraDocument:
    bracket = [
        {"i": i, "j": j, "k": k, "c": float(c)} for i, j, k, c in entry.tensor().entries
    ]
    return AlgebraDocument(
        name=entry.name,
        dim=entry.dim,
        dim_k=entry.dim_k,
        dim_h=entry.dim_h,
        dim_n=entry.dim_n,
        bracket=bracket,
        ip=entry.ip,
        meta=dict(entry.meta),
    )


def load(path_or_name: str) -> AlgebraDocument:
    """Load a document from a JSON file, or from the catalog by name."""
    p = Path(path_or_name)
    if p.exists():
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as err:
            raise DocumentError("parse-error", str(err)) from None
        return document_from_dict(raw)
    try:
        return document_from_catalog(_catalog.get(path_or_name))
    except KeyError:
        raise DocumentError(
            "not-found", f"{path_or_name!r} is neither a file nor a catalog name"
        ) from None


def document_from_decomposition(
    dec: MetricDecomposition, name: str, meta: dict | None = None
) -> AlgebraDocument:
    bracket = [
        {"i": i, "j": j, "k": k, "c": float(c)} for i, j, k, c in dec.bracket.entries
    ]
    ip = None
    if np.max(np.abs(dec.ip - np.eye(dec.dim_p))) > 0:
        ip = dec.ip
    return AlgebraDocument(
        name=name,
        dim=dec.dim,
        dim_k=dec.dim_k,
        dim_h=dec.dim_h,
        dim_n=dec.dim_n,
        bracket=bracket,
        ip=ip,
        meta=meta or {},
    )


def validate(doc: AlgebraDocument, tol: float = 1e-9):
    """(decomposition, violations): decomposition is None when invalid."""
    try:
        dec = MetricDecomposition(
            doc.tensor(), doc.dim_k, doc.dim_h, doc.dim_n, ip=doc.ip, tol=tol
        )
        return dec, []
    except DecompositionError as err:
        return None, err.violations


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class CheckRecord:
    name: str
    anchor: str  # the identity or inequality being checked, as a formula
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    info: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {"name": self.name, "anchor": self.anchor, "passed": bool(self.passed)}
        if self.value is not None:
            out["value"] = _jsonable(self.value)
        if self.tolerance is not None:
            out["tolerance"] = float(self.tolerance)
        if self.info:
            out["info"] = {k: _jsonable(v) for k, v in self.info.items()}
        return out


def _jsonable(v):
    if isinstance(v, (bool, str)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return str(v)


@dataclass
class Report:
    command: str
    input_name: str
    input_hash: str
    tolerance: float
    checks: list[CheckRecord] = field(default_factory=list)
    classification: str = ""
    errors: list[dict] = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def add(self, record: CheckRecord):
        self.checks.append(record)

    @property
    def passed(self) -> bool:
        return not self.errors and all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        if self.errors:
            return 2
        return 0 if self.passed else 1

    def to_json_dict(self) -> dict:
        return {
            "tool": "homsol",
            "version": TOOL_VERSION,
            "command": self.command,
            "input": {"name": self.input_name, "sha256": self.input_hash},
            "config": {"tolerance": float(self.tolerance)},
            "classification": self.classification,
            "passed": bool(self.passed),
            "checks": [c.to_json_dict() for c in self.checks],
            "errors": self.errors,
            "results": {k: _jsonable(v) for k, v in self.results.items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)
