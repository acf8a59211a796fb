import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field, asdict, fields
from typing import Any, Dict, List, Optional, Tuple

from ..certify import (
    blass_duals,
    check_blass_cert,
    check_completion_cert,
    completion_duals,
    flowtime_lower_bound,
    slot_trace,
)
from ..engine import export_trace, metrics, simulate
from ..errors import ConfigError, PolyschedError
from ..instances import Instance, gen_family, gen_flowtime_concat, load_instance, params_from_dict
from ..schedulers import SCHEDULERS, make_scheduler
from ..schedulers.blass import BlassConfig
from ..utils.defaults import DEFAULT_CERT_S, DEFAULT_EPSILON, FAMILIES
from ..utils.jsonio import document_hash, dump_document, load_document

logger = logging.getLogger(__name__)

OBJECTIVES = ("completion", "flow")


@dataclass
class ExperimentConfig:
    family: str = "multidim"
    instance: Optional[str] = None
    generator: Dict[str, Any] = field(default_factory=lambda: {"n": 6, "m": 2})
    count: int = 1
    schedulers: List[str] = field(default_factory=lambda: ["pf"])
    speeds: List[float] = field(default_factory=lambda: [1.0])
    cert_s: float = DEFAULT_CERT_S
    epsilon: float = DEFAULT_EPSILON
    objective: str = "completion"
    certify: bool = True
    copies: int = 1
    gap: float = 1.0
    seed: int = 0
    out: Optional[str] = None

    def validate(self) -> None:
        if not self.schedulers:
            raise ConfigError("scheduler list is empty")
        unknown = [s for s in self.schedulers if s not in SCHEDULERS]
        if unknown:
            raise ConfigError(f"unknown schedulers {unknown}, choose from {sorted(SCHEDULERS)}")
        if not self.speeds:
            raise ConfigError("speed grid is empty")
        for s in self.speeds:
            if not isinstance(s, (int, float)) or not math.isfinite(s) or s < 1.0:
                raise ConfigError(f"speeds must be finite and >= 1, got {s}")
        if self.instance is None and self.family not in FAMILIES:
            raise ConfigError(f"unknown family '{self.family}'")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}, got '{self.objective}'")
        if not self.cert_s > 0:
            raise ConfigError(f"cert_s must be positive, got {self.cert_s}")
        if self.count < 1 or self.copies < 1 or not self.gap > 0:
            raise ConfigError("count and copies must be >= 1 and gap positive")
        try:
            BlassConfig(self.epsilon)
        except PolyschedError as e:
            raise ConfigError(str(e)) from e

    @property
    def hash(self) -> str:
        doc = asdict(self)
        doc.pop("out")
        return document_hash(doc)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(f"unknown config keys {extra}")
        cfg = cls(**doc)
        cfg.speeds = [float(s) for s in cfg.speeds]
        cfg.validate()
        return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        doc = load_document(path, ConfigError)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    return ExperimentConfig.from_dict(doc)


@dataclass
class ReportRow:
    config_hash: str
    seed: int
    instance: str
    family: str
    n: int
    scheduler: str
    speed: float
    weighted_completion: Optional[float] = None
    weighted_flow: Optional[float] = None
    total_flow: Optional[float] = None
    makespan: Optional[float] = None
    cert_kind: str = ""
    cert_ok: Optional[bool] = None
    lower_bound: Optional[float] = None
    cert_ratio: Optional[float] = None
    max_residual: Optional[float] = None
    error: str = ""
    runtime: float = 0.0


@dataclass
class Report:
    config_hash: str
    rows: List[ReportRow] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(1 for r in self.rows if r.cert_ok is False)

    @property
    def errors(self) -> int:
        return sum(1 for r in self.rows if r.error)

    @property
    def ok(self) -> bool:
        return self.failures == 0


def build_instances(cfg: ExperimentConfig) -> List[Tuple[str, int, Instance]]:
    if cfg.instance is not None:
        try:
            with open(cfg.instance, mode='r') as f:
                inst = load_instance(f.read())
        except OSError as e:
            raise ConfigError(f"cannot read instance: {e}") from e
        return [(os.path.basename(cfg.instance), cfg.seed, inst)]
    params = params_from_dict(cfg.generator)
    out = []
    for k in range(cfg.count):
        seed = cfg.seed + k
        inst = gen_family(cfg.family, params, seed)
        if cfg.copies > 1:
            inst = gen_flowtime_concat(inst, cfg.copies, cfg.gap)
        out.append((f"{cfg.family}-{seed}", seed, inst))
    return out


def _scheduler(name: str, cfg: ExperimentConfig):
    if name == "blass":
        return make_scheduler(name, epsilon=cfg.epsilon)
    return make_scheduler(name)


def _certify(row: ReportRow, inst: Instance, tr, name: str, cfg: ExperimentConfig) -> None:
    if name == "pf" and cfg.objective == "completion":
        st = slot_trace(tr)
        cert = completion_duals(st, tr.weights, tr.sizes, cfg.cert_s, opt_speed=tr.speed)
        report = check_completion_cert(cert, st, tr.weights, tr.sizes)
    elif name == "pf":
        row.cert_kind = "flow bound"
        row.lower_bound = flowtime_lower_bound(inst, tr, cfg.cert_s)
        row.cert_ratio = row.weighted_flow / row.lower_bound if row.lower_bound > 0 else None
        return
    elif name == "blass" and abs(tr.speed - BlassConfig(cfg.epsilon).eta) <= 1e-9:
        cert = blass_duals(tr, cfg.epsilon, machines=inst.dims)
        report = check_blass_cert(cert, inst, tr)
    else:
        return
    row.cert_kind = report.kind
    row.cert_ok = report.ok
    row.lower_bound = report.lower_bound
    row.cert_ratio = report.ratio if report.lower_bound > 0 else None
    row.max_residual = max(report.max_residual.values(), default=0.0)


def run_cell(label: str, seed: int, inst: Instance, name: str, speed: float,
             cfg: ExperimentConfig) -> Tuple[ReportRow, Any]:
    row = ReportRow(config_hash=cfg.hash, seed=seed, instance=label, family=inst.family,
                    n=len(inst.jobs), scheduler=name, speed=speed)
    started = time.monotonic()
    tr = None
    try:
        tr = simulate(inst, _scheduler(name, cfg), speed=speed)
        m = metrics(tr)
        row.weighted_completion = m.weighted_completion
        row.weighted_flow = m.weighted_flow
        row.total_flow = m.total_flow
        row.makespan = m.makespan
        if cfg.certify:
            _certify(row, inst, tr, name, cfg)
    except ConfigError:
        raise
    except PolyschedError as e:
        row.error = f"{type(e).__name__}: {e}"
        logger.error(f"{label} / {name} @ {speed}: {row.error}")
    row.runtime = time.monotonic() - started
    return row, tr


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Run every (instance, scheduler, speed) cell; per-cell errors are recorded, not raised."""
    cfg.validate()
    report = Report(config_hash=cfg.hash)
    for label, seed, inst in build_instances(cfg):
        for name in cfg.schedulers:
            for speed in cfg.speeds:
                row, tr = run_cell(label, seed, inst, name, speed, cfg)
                report.rows.append(row)
                logger.info(f"{label} {name} speed={speed}: wC={row.weighted_completion} "
                            f"cert={row.cert_ok} ratio={row.cert_ratio}")
                if cfg.out and tr is not None:
                    _write_trace(cfg.out, label, name, speed, tr)
    if cfg.out:
        write_report(report, cfg.out)
    return report


def _write_trace(out: str, label: str, name: str, speed: float, tr) -> None:
    path = os.path.join(out, "traces")
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, f"{label}_{name}_{speed:g}.json"), mode='w') as f:
        f.write(export_trace(tr))


def write_rows(rows: List[Any], path: str) -> None:
    if not rows:
        return
    names = [f.name for f in fields(rows[0])]
    with open(path, mode='w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=names)
        writer.writeheader()
        for r in rows:
            writer.writerow(asdict(r))


def write_report(report: Report, out: str) -> None:
    os.makedirs(out, exist_ok=True)
    write_rows(report.rows, os.path.join(out, "report.csv"))
    dump_document({"config_hash": report.config_hash, "cells": len(report.rows),
                   "certificate_failures": report.failures, "errors": report.errors,
                   "rows": [asdict(r) for r in report.rows]},
                  os.path.join(out, "summary.json"))


@dataclass
class SpeedRow:
    config_hash: str
    seed: int
    instance: str
    speed: float
    weighted_flow: float
    lower_bound: float
    ratio: float
    degraded: bool = False


def compare_flowtime_speed(cfg: ExperimentConfig) -> List[SpeedRow]:
    """PF weighted flow time against certified lower bounds over the speed grid.

    Rows at the lowest speed are flagged `degraded` on concatenated instances
    whose flow-to-bound ratio there exceeds the ratio at the highest speed.
    """
    cfg.validate()
    if cfg.objective != "flow":
        raise ConfigError("compare_flowtime_speed needs objective 'flow'")
    speeds = sorted(set(cfg.speeds))
    rows: List[SpeedRow] = []
    for label, seed, inst in build_instances(cfg):
        batch = []
        for speed in speeds:
            tr = simulate(inst, make_scheduler("pf"), speed=speed)
            flow = metrics(tr).weighted_flow
            lb = flowtime_lower_bound(inst, tr, cfg.cert_s)
            batch.append(SpeedRow(config_hash=cfg.hash, seed=seed, instance=label, speed=speed,
                                  weighted_flow=flow, lower_bound=lb, ratio=flow / lb))
            logger.info(f"{label} pf speed={speed}: wF={flow:.6g} lower bound={lb:.6g}")
        concat = inst.metadata.get("generator") == "gen_flowtime_concat"
        if concat and len(batch) > 1 and batch[0].ratio > batch[-1].ratio * (1.0 + 1e-9):
            batch[0].degraded = True
        rows.extend(batch)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        write_rows(rows, os.path.join(cfg.out, "sweep.csv"))
    return rows
