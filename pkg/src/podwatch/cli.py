"""Command-line orchestrator: every capability scriptable from one binary.

Subcommands: simulate (run the digital twin), pipeline (poll/correlate/
ingest/frame cycles against live endpoints), serve (the FastAPI service
with an embedded twin), replay, report, dump, and bench (the four-stage
timing reproduction). Flags override the optional key=value config file
named by --config or $PODWATCH_CONFIG. Usage errors exit 2, runtime
failures exit 1.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import modbus
from .baseline import JsonlSink, load_baseline
from .defaults import baseline_for_simulator
from .harness import SimHarness
from .history import ReplayWindow, failure_inventory, hotspot_report, replay, usage_report
from .pipeline import Pipeline
from .podsim import (
    ClusterConfig,
    ControlServer,
    ModbusTcpServer,
    PodConfig,
    Simulator,
    TelemetryServer,
    build_register_map,
    parse_script,
)
from .podsim.servers import collect_telemetry
from .store import NoData, TripleStore

log = logging.getLogger(__name__)

TIMINGS_HEADER = "cycle\ttimestamp\tpoll\tcorrelate\tinsert\tviz\ttotal\n"


def load_config(path: str) -> dict[str, str]:
    """Key=value config lines; '#' comments and blank lines ignored."""
    config: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            config[key.strip()] = value.strip()
    return config


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    path = args.config or os.environ.get("PODWATCH_CONFIG")
    if not path:
        return
    if not Path(path).exists():
        parser.error(f"config file {path} does not exist")
    for key, value in load_config(path).items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and parser.get_default(attr) == getattr(args, attr):
            default = parser.get_default(attr)
            caster = type(default) if default is not None else str
            setattr(args, attr, caster(value) if caster is not bool else value == "true")


def _zone_names(count: int) -> tuple[str, ...]:
    return tuple(f"zone{i:02d}" for i in range(1, count + 1))


# -- simulate -----------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    zones = _zone_names(args.zones)
    register_map = build_register_map(zones, target_points=args.points or None)
    script = parse_script(args.script) if args.script else None
    sim = Simulator(
        PodConfig(zones=zones),
        ClusterConfig(nodes=args.nodes, racks=args.racks, zones=zones, seed=args.seed),
        register_map=register_map,
        script=script,
        start_epoch=args.start_epoch or int(time.time()),
    )
    if args.write_map:
        modbus.save_register_map(sim.map, args.write_map)
        print(f"register map -> {args.write_map}")
    if args.write_baseline:
        Path(args.write_baseline).write_text(baseline_for_simulator(sim), encoding="utf-8")
        print(f"baseline -> {args.write_baseline}")
    servers = [
        ModbusTcpServer(lambda: sim.registers, lambda: sim.coils, args.host, args.modbus_port),
        TelemetryServer(lambda: sim.telemetry(), args.host, args.telemetry_port),
        ControlServer(lambda req: sim.control(req.get("verb", ""), req.get("target", "")), args.host, args.control_port),
    ]
    for server in servers:
        server.start()
    print(
        f"simulator up: modbus {args.host}:{servers[0].port} "
        f"telemetry {args.host}:{servers[1].port} control {args.host}:{servers[2].port} "
        f"({len(sim.map)} points, {args.nodes} nodes)"
    )
    deadline = None if args.duration <= 0 else time.monotonic() + args.duration
    try:
        while deadline is None or time.monotonic() < deadline:
            started = time.monotonic()
            sim.advance(args.tick * args.speed)
            time.sleep(max(0.0, args.tick - (time.monotonic() - started)))
    except KeyboardInterrupt:
        pass
    finally:
        for server in servers:
            server.stop()
    return 0


# -- pipeline ------------------------------------------------------------------


def cmd_pipeline(args: argparse.Namespace) -> int:
    points = modbus.load_register_map(args.map)
    baseline = load_baseline(args.baseline)
    store = TripleStore(args.store)
    modbus_host, modbus_port = _endpoint(args.modbus)
    telemetry_host, telemetry_port = _endpoint(args.telemetry)
    client = modbus.ModbusClient(modbus_host, modbus_port)
    for attempt in range(args.retries + 1):
        try:
            client.connect()
            break
        except modbus.ConnectionFailed as exc:
            log.error("modbus connect attempt %d failed: %s", attempt + 1, exc)
            if attempt == args.retries:
                print(f"error: cannot reach modbus endpoint: {exc}", file=sys.stderr)
                return 1
            time.sleep(min(5.0, 0.5 * 2**attempt))

    def poll_fn(timestamp: int):
        result = modbus.poll_map(client, points, timestamp=timestamp)
        if result.failed_points:
            log.warning("partial poll: %d failed points", len(result.failed_points))
        return result.readings, result.failed_points

    pipeline = Pipeline(
        baseline,
        store,
        poll_fn,
        lambda: collect_telemetry(telemetry_host, telemetry_port),
        frames_dir=Path(args.frames_dir) if args.frames_dir else None,
        event_log=JsonlSink(args.event_log, "event_log") if args.event_log else None,
        email_spool=JsonlSink(args.email_spool, "email") if args.email_spool else None,
    )
    sys.stdout.write(TIMINGS_HEADER)
    sys.stdout.flush()
    failures = 0
    ran = 0
    while args.cycles == 0 or ran < args.cycles:
        started = time.monotonic()
        try:
            result = pipeline.run_cycle(int(time.time()))
            sys.stdout.write(result.timings.tsv_line())
            sys.stdout.flush()
        except Exception as exc:  # failed cycle is logged and skipped
            failures += 1
            log.error("cycle failed: %s", exc)
            if failures > args.retries:
                print(f"error: {failures} consecutive cycle failures", file=sys.stderr)
                client.close()
                store.close()
                return 1
        else:
            failures = 0
        ran += 1
        if args.cycles == 0 or ran < args.cycles:
            time.sleep(max(0.0, args.period - (time.monotonic() - started)))
    client.close()
    store.close()
    return 0


def _endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


# -- serve ----------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server.service import EmbeddedService, write_default_tokens

    if args.write_tokens:
        write_default_tokens(args.write_tokens)
        print(f"tokens -> {args.write_tokens}")
    script = parse_script(args.script) if args.script else None
    service = EmbeddedService(
        store_path=args.store,
        nodes=args.nodes,
        racks=args.racks,
        zones=args.zones,
        target_points=args.points or None,
        script=script,
        seed=args.seed,
        cycle_period=args.period,
        wall_period=args.period / args.speed,
        tokens_path=args.tokens,
        audit_path=args.audit_log,
        event_log_path=args.event_log,
        email_spool_path=args.email_spool,
        frames_dir=args.frames_dir,
        start_epoch=args.start_epoch or int(time.time()),
    )
    service.start_pipeline()
    print(f"podwatch service on http://{args.host}:{args.port} (ws: /ws)")
    try:
        uvicorn.run(service.app, host=args.host, port=args.port, log_level="warning")
    finally:
        service.stop()
    return 0


# -- replay ---------------------------------------------------------------------


def cmd_replay(args: argparse.Namespace) -> int:
    window_args = {"at": args.at, "before": args.before, "after": args.after}
    if args.server:
        import httpx

        response = httpx.get(
            f"{args.server}/replay",
            params=window_args,
            headers={"X-Auth-Token": args.token},
            timeout=120.0,
        )
        if response.status_code != 200:
            print(f"error: server replied {response.status_code}: {response.text}", file=sys.stderr)
            return 1
        sys.stdout.write(response.text)
        return 0
    store = TripleStore(args.store)
    baseline = load_baseline(args.baseline)
    window = ReplayWindow(args.at, args.before, args.after)
    try:
        count = 0
        for _frame, blob in replay(store, baseline, window):
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / f"{_frame.frame_id}.json").write_bytes(blob)
            else:
                sys.stdout.buffer.write(blob)
            count += 1
        if args.out:
            print(f"{count} frames -> {args.out}")
    except (NoData, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        store.close()
        return 1
    store.close()
    return 0


# -- report -----------------------------------------------------------------------


def cmd_report(args: argparse.Namespace) -> int:
    period = (args.start, args.end)
    if args.server:
        import httpx

        paths = {"usage": "/reports/usage", "hotspot": "/reports/hotspots", "failures": "/reports/failures"}
        params: dict = {"start": args.start, "end": args.end}
        if args.kind == "usage":
            params["bucket"] = args.bucket
        response = httpx.get(
            f"{args.server}{paths[args.kind]}",
            params=params,
            headers={"X-Auth-Token": args.token},
            timeout=120.0,
        )
        if response.status_code != 200:
            print(f"error: server replied {response.status_code}: {response.text}", file=sys.stderr)
            return 1
        print(json.dumps(response.json(), indent=2, sort_keys=True))
        return 0

    store = TripleStore(args.store)
    baseline = load_baseline(args.baseline) if args.baseline else None
    try:
        if args.kind == "usage":
            report = usage_report(store, period, args.bucket, baseline)
            if args.json:
                print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
            else:
                sys.stdout.write(report.to_tsv())
        elif args.kind == "hotspot":
            rows = hotspot_report(store, period, baseline)
            if args.json:
                print(json.dumps([row.__dict__ for row in rows], indent=2, sort_keys=True))
            else:
                sys.stdout.write("rack\tzone\tmean_temp_delta\tpeak_temp\n")
                for r in rows:
                    sys.stdout.write(f"{r.rack}\t{r.zone}\t{r.mean_temp_delta:.3f}\t{r.peak_temp:.3f}\n")
        else:
            if baseline is None:
                print("error: failures report needs --baseline", file=sys.stderr)
                return 1
            rows = failure_inventory(store, baseline, period)
            if args.json:
                print(
                    json.dumps(
                        [
                            {"component": r.component, "failure_count": r.failure_count, "hostnames": list(r.hostnames)}
                            for r in rows
                        ],
                        indent=2,
                        sort_keys=True,
                    )
                )
            else:
                sys.stdout.write("component\tfailure_count\thostnames\n")
                for r in rows:
                    sys.stdout.write(f"{r.component}\t{r.failure_count}\t{','.join(r.hostnames)}\n")
    except NoData as exc:
        print(f"error: {exc}", file=sys.stderr)
        store.close()
        return 1
    store.close()
    return 0


# -- dump ---------------------------------------------------------------------------


def cmd_dump(args: argparse.Namespace) -> int:
    store = TripleStore(args.store)
    for line in store.dump(args.table):
        sys.stdout.write(line)
    store.close()
    return 0


# -- bench ----------------------------------------------------------------------------


def cmd_bench(args: argparse.Namespace) -> int:
    store_path = args.store or ":memory:"
    with SimHarness(
        store_path,
        nodes=args.nodes,
        racks=args.racks,
        slots_per_rack=32,
        zones=args.zones,
        target_points=args.points,
        seed=args.seed,
        fast_store=True,
    ) as harness:
        results = harness.run_cycles(args.cycles)
    worst = max(results, key=lambda r: r.timings.total)
    t = worst.timings
    print(f"pipeline bench: {args.points} points, {args.nodes} nodes, {args.cycles} cycle(s)")
    print("stage            seconds")
    print(f"poll/parse       {t.poll:8.3f}")
    print(f"correlate        {t.correlate:8.3f}")
    print(f"db insert        {t.insert:8.3f}")
    print(f"viz build        {t.viz:8.3f}")
    print(f"total            {t.total:8.3f}   (budget {args.budget})")
    if args.tsv:
        with open(args.tsv, "w", encoding="utf-8") as fh:
            fh.write(TIMINGS_HEADER)
            for r in results:
                fh.write(r.timings.tsv_line())
    if t.total > args.budget:
        print("over budget", file=sys.stderr)
        return 1
    return 0


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podwatch", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--config", help="key=value config file (default $PODWATCH_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the pod + cluster digital twin")
    sim.add_argument("--host", default="127.0.0.1")
    sim.add_argument("--modbus-port", type=int, default=1502)
    sim.add_argument("--telemetry-port", type=int, default=1503)
    sim.add_argument("--control-port", type=int, default=1504)
    sim.add_argument("--points", type=int, default=0, help="pad register map to this many points")
    sim.add_argument("--nodes", type=int, default=96)
    sim.add_argument("--racks", type=int, default=12)
    sim.add_argument("--zones", type=int, default=4)
    sim.add_argument("--seed", type=int, default=7)
    sim.add_argument("--script", help="fault/scenario script TSV")
    sim.add_argument("--tick", type=float, default=1.0, help="wall seconds per tick")
    sim.add_argument("--speed", type=float, default=1.0, help="sim seconds per wall second")
    sim.add_argument("--duration", type=float, default=0.0, help="stop after this many wall seconds")
    sim.add_argument("--start-epoch", type=int, default=0)
    sim.add_argument("--write-map", help="write the register map TSV and continue")
    sim.add_argument("--write-baseline", help="write the matching baseline TSV and continue")
    sim.set_defaults(func=cmd_simulate)

    pipe = sub.add_parser("pipeline", help="run poll/correlate/ingest/frame cycles")
    pipe.add_argument("--modbus", default="127.0.0.1:1502", help="host:port")
    pipe.add_argument("--telemetry", default="127.0.0.1:1503", help="host:port")
    pipe.add_argument("--map", required=True, help="register map TSV")
    pipe.add_argument("--baseline", required=True)
    pipe.add_argument("--store", required=True)
    pipe.add_argument("--cycles", type=int, default=1, help="0 = run forever")
    pipe.add_argument("--period", type=float, default=15.0)
    pipe.add_argument("--retries", type=int, default=3)
    pipe.add_argument("--frames-dir")
    pipe.add_argument("--event-log")
    pipe.add_argument("--email-spool")
    pipe.set_defaults(func=cmd_pipeline)

    serve = sub.add_parser("serve", help="authoritative server with embedded simulator")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8787)
    serve.add_argument("--store", default=":memory:")
    serve.add_argument("--points", type=int, default=0)
    serve.add_argument("--nodes", type=int, default=96)
    serve.add_argument("--racks", type=int, default=12)
    serve.add_argument("--zones", type=int, default=4)
    serve.add_argument("--seed", type=int, default=7)
    serve.add_argument("--script")
    serve.add_argument("--period", type=float, default=15.0, help="sim seconds per cycle")
    serve.add_argument("--speed", type=float, default=1.0, help="cycles run speed-times faster")
    serve.add_argument("--tokens", help="token file (token\\tprincipal\\ttier)")
    serve.add_argument("--write-tokens", help="write the default token file and continue")
    serve.add_argument("--audit-log")
    serve.add_argument("--event-log")
    serve.add_argument("--email-spool")
    serve.add_argument("--frames-dir")
    serve.add_argument("--start-epoch", type=int, default=0)
    serve.set_defaults(func=cmd_serve)

    rep = sub.add_parser("replay", help="stream reconstructed frames for a window")
    rep.add_argument("--at", type=int, required=True, help="event time, UTC seconds")
    rep.add_argument("--before", type=int, default=0)
    rep.add_argument("--after", type=int, default=0)
    rep.add_argument("--store")
    rep.add_argument("--baseline")
    rep.add_argument("--server", help="service URL; replay remotely instead of --store")
    rep.add_argument("--token", default="viewer-token")
    rep.add_argument("--out", help="write frames/<id>.json instead of stdout")
    rep.set_defaults(func=cmd_replay)

    report = sub.add_parser("report", help="historical reports")
    report.add_argument("kind", choices=["usage", "hotspot", "failures"])
    report.add_argument("--bucket", default="dow", choices=["dow", "hour", "user", "rack"])
    report.add_argument("--start", type=int, default=0)
    report.add_argument("--end", type=int, default=2**33)
    report.add_argument("--store")
    report.add_argument("--baseline")
    report.add_argument("--server")
    report.add_argument("--token", default="viewer-token")
    report.add_argument("--json", action="store_true")
    report.set_defaults(func=cmd_report)

    dump = sub.add_parser("dump", help="store table as canonical sorted TSV")
    dump.add_argument("--store", required=True)
    dump.add_argument("--table", default="raw", choices=["edge", "edge_t", "deg", "raw"])
    dump.set_defaults(func=cmd_dump)

    bench = sub.add_parser("bench", help="reproduce the four-stage timing run")
    bench.add_argument("--points", type=int, default=5325)
    bench.add_argument("--nodes", type=int, default=900)
    bench.add_argument("--racks", type=int, default=44)
    bench.add_argument("--zones", type=int, default=8)
    bench.add_argument("--cycles", type=int, default=1)
    bench.add_argument("--seed", type=int, default=7)
    bench.add_argument("--budget", type=float, default=11.9)
    bench.add_argument("--store", help="store path (default in-memory)")
    bench.add_argument("--tsv", help="write per-cycle timings TSV")
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    _apply_config(args, parser)
    validators = {
        "pipeline": lambda: args.period > 0,
        "serve": lambda: args.period > 0 and args.speed > 0,
    }
    check = validators.get(args.command)
    if check and not check():
        parser.error("period and speed must be > 0")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("unhandled error", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
