"""Problem description files (YAML) and result records (JSON lines).

A problem file has four blocks::

    model:
      p: 2
      basis: polynomial        # or tabulated, with table: {nodes: [...], values: [[...], ...]}
      n: 2
      m: 4
      D: [1.0, 1.0]            # diagonal list, or a full p x p matrix
      sigma2: 1.0
      region: {lo: 0.0, hi: 1.0}
    design:                    # optional
      points: [0.0, 1.0]
      weights: [0.5, 0.5]      # or replications: [2, 2]
    criterion:                 # one mapping or a list of them
      kind: G                  # PhiQ, A, D, E, G
      grid_points: 1001
    run:                       # all optional
      seed: 1
      replicates: 20000

Unknown keys are rejected at every level.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

import numpy as np
import yaml

from rcrdesign.criteria import DEFAULT_GRID, CriterionSpec
from rcrdesign.model import Design, DesignError, Interval, RCRModel, RegressionBasis


class ConfigError(DesignError):
    """Malformed or inconsistent problem description."""


def _take(block: Any, name: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"block {name!r} must be a mapping")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    missing = set(required) - set(block)
    if missing:
        raise ConfigError(f"missing keys in {name!r}: {sorted(missing)}")
    return block


def _float(value, what: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number, got {value!r}") from None


def _int(value, what: str) -> int:
    f = _float(value, what)
    if f != int(f):
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    return int(f)


def _floats(values, what: str) -> list:
    if not isinstance(values, (list, tuple)):
        raise ConfigError(f"{what} must be a list")
    return [_floats(v, what) if isinstance(v, (list, tuple)) else _float(v, what) for v in values]


@dataclass
class ModelConfig:
    p: int
    n: int
    m: int
    D: list
    region: tuple[float, float]
    basis: str = "polynomial"
    sigma2: float = 1.0
    table: Optional[dict] = None

    KEYS = {"p", "basis", "table", "n", "m", "D", "sigma2", "region"}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        _take(d, "model", cls.KEYS, {"p", "n", "m", "D", "region"})
        region = d["region"]
        if isinstance(region, dict):
            _take(region, "model.region", {"lo", "hi"}, {"lo", "hi"})
            region = (region["lo"], region["hi"])
        if not isinstance(region, (list, tuple)) or len(region) != 2:
            raise ConfigError("model.region must be {lo, hi} or a two-element list")
        table = d.get("table")
        if table is not None:
            _take(table, "model.table", {"nodes", "values"}, {"nodes", "values"})
            table = {"nodes": _floats(table["nodes"], "table.nodes"), "values": _floats(table["values"], "table.values")}
        basis = d.get("basis", "polynomial")
        if basis not in ("polynomial", "tabulated"):
            raise ConfigError(f"model.basis must be polynomial or tabulated, got {basis!r}")
        if (basis == "tabulated") != (table is not None):
            raise ConfigError("model.table is required for, and only for, the tabulated basis")
        return cls(
            p=_int(d["p"], "model.p"),
            n=_int(d["n"], "model.n"),
            m=_int(d["m"], "model.m"),
            D=_floats(d["D"], "model.D"),
            region=(_float(region[0], "region.lo"), _float(region[1], "region.hi")),
            basis=basis,
            sigma2=_float(d.get("sigma2", 1.0), "model.sigma2"),
            table=table,
        )

    def to_dict(self) -> dict:
        out = {
            "p": self.p,
            "basis": self.basis,
            "n": self.n,
            "m": self.m,
            "D": self.D,
            "sigma2": self.sigma2,
            "region": {"lo": self.region[0], "hi": self.region[1]},
        }
        if self.table is not None:
            out["table"] = self.table
        return out

    @property
    def diagonal_list(self) -> bool:
        return all(not isinstance(v, list) for v in self.D)

    def build(self) -> RCRModel:
        if self.basis == "tabulated":
            basis = RegressionBasis.tabulated(self.table["nodes"], self.table["values"])
            if basis.p != self.p:
                raise ConfigError(f"table has {basis.p} basis functions but p={self.p}")
        else:
            basis = RegressionBasis.polynomial(self.p)
        return RCRModel(basis, self.n, self.m, np.asarray(self.D, dtype=float), self.sigma2, Interval(*self.region))


@dataclass
class DesignConfig:
    points: list
    weights: Optional[list] = None
    replications: Optional[list] = None

    @classmethod
    def from_dict(cls, d: dict) -> "DesignConfig":
        _take(d, "design", {"points", "weights", "replications"}, {"points"})
        if ("weights" in d) == ("replications" in d):
            raise ConfigError("design needs exactly one of weights or replications")
        reps = d.get("replications")
        return cls(
            points=_floats(d["points"], "design.points"),
            weights=None if "weights" not in d else _floats(d["weights"], "design.weights"),
            replications=None if reps is None else [_int(r, "design.replications") for r in reps],
        )

    def to_dict(self) -> dict:
        out = {"points": self.points}
        if self.weights is not None:
            out["weights"] = self.weights
        else:
            out["replications"] = self.replications
        return out

    def build(self) -> Design:
        if self.replications is not None:
            return Design.exact(self.points, self.replications)
        return Design.approximate(self.points, self.weights)


@dataclass
class CriterionConfig:
    kind: str
    q: Optional[float] = None
    grid_points: int = DEFAULT_GRID

    @classmethod
    def from_dict(cls, d: dict) -> "CriterionConfig":
        _take(d, "criterion", {"kind", "q", "grid_points"}, {"kind"})
        q = d.get("q")
        return cls(
            kind=str(d["kind"]),
            q=None if q is None else _float(q, "criterion.q"),
            grid_points=_int(d.get("grid_points", DEFAULT_GRID), "criterion.grid_points"),
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, "q": self.q, "grid_points": self.grid_points}

    def build(self) -> CriterionSpec:
        return CriterionSpec(self.kind, q=self.q, grid_points=self.grid_points)


@dataclass
class RunConfig:
    seed: Optional[int] = None
    replicates: int = 20000
    se_threshold: float = 4.0
    tol: float = 1e-6
    threads: Optional[int] = None
    max_iter: int = 100_000
    stop_tol: float = 1e-12
    resolution: float = 1e-3
    refine_tol: float = 1e-6

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        _take(d, "run", names)
        kw = {}
        for f in fields(cls):
            if f.name not in d or d[f.name] is None:
                continue
            conv = _int if f.name in ("seed", "replicates", "threads", "max_iter") else _float
            kw[f.name] = conv(d[f.name], f"run.{f.name}")
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ProblemConfig:
    model: ModelConfig
    design: Optional[DesignConfig] = None
    criteria: list = field(default_factory=list)
    run: RunConfig = field(default_factory=RunConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        _take(d, "top level", {"model", "design", "criterion", "run"}, {"model"})
        crit = d.get("criterion") or []
        if isinstance(crit, dict):
            crit = [crit]
        return cls(
            model=ModelConfig.from_dict(d["model"]),
            design=None if d.get("design") is None else DesignConfig.from_dict(d["design"]),
            criteria=[CriterionConfig.from_dict(c) for c in crit],
            run=RunConfig.from_dict(d.get("run") or {}),
        )

    def to_dict(self) -> dict:
        out = {"model": self.model.to_dict()}
        if self.design is not None:
            out["design"] = self.design.to_dict()
        if self.criteria:
            out["criterion"] = [c.to_dict() for c in self.criteria]
        out["run"] = self.run.to_dict()
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def loads(text: str) -> ProblemConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse problem file: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("problem file must contain a mapping")
    return ProblemConfig.from_dict(data)


def dumps(cfg: ProblemConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def load(path) -> ProblemConfig:
    with open(path) as fh:
        return loads(fh.read())


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class ResultRecord:
    command: str
    config_digest: str
    path: str = "n/a"
    status: str = "ok"
    exit_code: int = 0
    criteria: list = field(default_factory=list)
    design: list = field(default_factory=list)
    certificates: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    timing: Optional[float] = None

    def to_records(self, include_timing: bool = False) -> list[dict]:
        recs = [
            {
                "record": "header",
                "command": self.command,
                "config_digest": self.config_digest,
                "path": self.path,
                "status": self.status,
                "exit_code": self.exit_code,
            }
        ]
        recs += [{"record": "criterion", **c} for c in self.criteria]
        recs += [{"record": "design_point", **p} for p in self.design]
        recs += [{"record": "certificate", "name": k, "value": v} for k, v in self.certificates.items()]
        recs += [{"record": "matrix", "name": k, "data": v} for k, v in self.matrices.items()]
        recs += [{"record": "message", "text": t} for t in self.messages]
        if include_timing and self.timing is not None:
            recs.append({"record": "timing", "seconds": self.timing})
        return recs

    @classmethod
    def from_records(cls, recs: list[dict]) -> "ResultRecord":
        head = dict(recs[0])
        if head.pop("record") != "header":
            raise ValueError("first record must be the header")
        out = cls(**head)
        for rec in recs[1:]:
            rec = dict(rec)
            kind = rec.pop("record")
            if kind == "criterion":
                out.criteria.append(rec)
            elif kind == "design_point":
                out.design.append(rec)
            elif kind == "certificate":
                out.certificates[rec["name"]] = rec["value"]
            elif kind == "matrix":
                out.matrices[rec["name"]] = rec["data"]
            elif kind == "message":
                out.messages.append(rec["text"])
            elif kind == "timing":
                out.timing = rec["seconds"]
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        return out

    def to_jsonl(self, include_timing: bool = False) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.to_records(include_timing))

    @classmethod
    def from_jsonl(cls, text: str) -> "ResultRecord":
        return cls.from_records([json.loads(line) for line in text.splitlines() if line.strip()])
