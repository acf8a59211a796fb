import argparse
import logging
import sys
from typing import List, Optional

from .certify import (
    blass_duals,
    check_blass_cert,
    check_completion_cert,
    completion_duals,
    export_certificate,
    flowtime_lower_bound,
    slot_trace,
)
from .engine import export_trace, load_trace, metrics, simulate
from .errors import CertificateError, ConfigError, InstanceError, PolyschedError, SimulationError
from .experiments import ExperimentConfig, compare_flowtime_speed, load_config, run_experiment
from .instances import emit_instance, gen_family, gen_flowtime_concat, load_instance, params_from_dict
from .schedulers import SCHEDULERS, make_scheduler
from .schedulers.blass import BlassConfig
from .utils.color import PrintColor, colorize
from .utils.defaults import DEFAULT_CERT_S, DEFAULT_EPSILON, FAMILIES
from .utils.jsonio import encode_document
from .utils.logging import setup_logging

logger = logging.getLogger("polysched")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CERTIFICATE = 2
EXIT_CONFIG = 3


def _read(path: str) -> str:
    try:
        with open(path, mode='r') as f:
            return f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e


def _load_trace(path: str):
    try:
        return load_trace(_read(path))
    except SimulationError as e:
        raise ConfigError(f"bad trace {path}: {e}") from e


def _color(args) -> bool:
    return not args.no_color and sys.stdout.isatty()


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, mode='w') as f:
        f.write(text)
    print(f"Export: {path}.")


def cmd_gen(args) -> int:
    params = params_from_dict({"n": args.n, "m": args.m})
    inst = gen_family(args.family, params, args.seed)
    if args.copies > 1:
        inst = gen_flowtime_concat(inst, args.copies, args.gap)
    _write(emit_instance(inst), args.out)
    return EXIT_OK


def _epsilon(args) -> float:
    return DEFAULT_EPSILON if args.epsilon is None else args.epsilon


def _default_speed(args) -> float:
    if args.sched == "blass":
        return BlassConfig(_epsilon(args)).eta
    return 1.0


def _scheduler(args):
    if args.sched == "blass":
        return make_scheduler("blass", epsilon=_epsilon(args))
    return make_scheduler(args.sched)


def cmd_run(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        if args.out:
            cfg.out = args.out
        report = run_experiment(cfg)
        print(f"cells: {len(report.rows)}, errors: {report.errors}, certificate failures: {report.failures}")
        return EXIT_OK if report.ok else EXIT_CERTIFICATE
    if not args.instance:
        raise ConfigError("run needs --instance or --config")
    inst = load_instance(_read(args.instance))
    speed = args.speed[0] if args.speed else _default_speed(args)
    tr = simulate(inst, _scheduler(args), speed=speed)
    m = metrics(tr)
    print(f"{args.sched} speed={speed}: weighted completion {m.weighted_completion:.6g}, "
          f"weighted flow {m.weighted_flow:.6g}, makespan {m.makespan:.6g}")
    if args.objective == "flow":
        print(f"certified flow-time lower bound {flowtime_lower_bound(inst, tr, args.cert_s):.6g}")
    if args.out:
        _write(export_trace(tr), args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    if not args.instance or not args.trace:
        raise ConfigError("certify needs --instance and --trace")
    inst = load_instance(_read(args.instance))
    tr = _load_trace(args.trace)
    if tr.scheduler.get("name") == "blass":
        cert = blass_duals(tr, args.epsilon, machines=inst.dims)
        report = check_blass_cert(cert, inst, tr)
    else:
        st = slot_trace(tr)
        cert = completion_duals(st, tr.weights, tr.sizes, args.cert_s, opt_speed=tr.speed)
        report = check_completion_cert(cert, st, tr.weights, tr.sizes)
    color = _color(args)
    status = colorize("OK", PrintColor.GREEN, color) if report.ok else colorize("VIOLATED", PrintColor.RED, color)
    print(f"{report.kind} certificate {status}: lower bound {report.lower_bound:.6g}, "
          f"ratio {report.ratio:.6g}, violations {report.violation_count}")
    if args.out:
        _write(encode_document(export_certificate(cert, report)), args.out)
    return EXIT_OK if report.ok else EXIT_CERTIFICATE


def cmd_sweep(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        cfg.objective = "flow"
    else:
        cfg = ExperimentConfig(family=args.family, generator={"n": args.n, "m": args.m},
                               schedulers=["pf"], speeds=list(args.speed or [1.0, 2.0]), cert_s=args.cert_s,
                               epsilon=_epsilon(args), objective="flow", copies=args.copies, gap=args.gap,
                               seed=args.seed, instance=args.instance)
    if args.out:
        cfg.out = args.out
    for row in compare_flowtime_speed(cfg):
        flag = colorize(" degraded", PrintColor.YELLOW, _color(args)) if row.degraded else ""
        print(f"{row.instance} speed={row.speed:g}: weighted flow {row.weighted_flow:.6g}, "
              f"lower bound {row.lower_bound:.6g}, ratio {row.ratio:.4g}{flag}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polysched", description="Online scheduling over packing polytopes.")
    parser.add_argument("--log-level", default="INFO")
    parser.add_argument("--no-color", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--instance")
        p.add_argument("--config")
        p.add_argument("--sched", default="pf", choices=sorted(SCHEDULERS))
        p.add_argument("--speed", type=float, nargs="+")
        p.add_argument("--cert-s", type=float, default=DEFAULT_CERT_S)
        p.add_argument("--epsilon", type=float, help=f"blass epsilon (default {DEFAULT_EPSILON}, or the one a trace records)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--family", default="multidim", choices=FAMILIES)
        p.add_argument("--n", type=int, default=6)
        p.add_argument("--m", type=int, default=2)
        p.add_argument("--copies", type=int, default=1)
        p.add_argument("--gap", type=float, default=1.0)
        p.add_argument("--objective", default="completion", choices=("completion", "flow"))
        p.add_argument("-o", "--out")

    p = sub.add_parser("gen", help="generate an instance document")
    common(p)
    p.set_defaults(func=cmd_gen)
    p = sub.add_parser("run", help="simulate one instance or an experiment grid")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("certify", help="certify a saved trace against its instance")
    common(p)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_certify)
    p = sub.add_parser("sweep", help="PF flow time against certified bounds over speeds")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, color=not args.no_color)
    try:
        return args.func(args)
    except (ConfigError, InstanceError) as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except CertificateError as e:
        logger.error(str(e))
        return EXIT_CERTIFICATE
    except PolyschedError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
