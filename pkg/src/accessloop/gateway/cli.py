"""Command-line interface.

Subcommands::

    run        batch pipeline over a JSON-lines item file, no server
    rule       lint | eval over a rule file
    audit      verify | export over a log file
    kpi        report over a signals file
    scenario   run a bundled end-to-end demo (currently: appendix-a)
    serve      start the HTTP gateway

Exit codes: 0 success, 1 validation failure, 2 internal error. The
listen address and config path may also come from the environment
(ACCESSLOOP_LISTEN, ACCESSLOOP_CONFIG).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .. import bundled
from ..audit import AuditLog, FileStore, MemoryStore, verify_export
from ..config import load_kv, parse_kv
from ..errors import AccessLoopError, CorruptLog, RuleDslError
from ..kpi import (
    JUDGMENT_CATEGORIES,
    KpiConfig,
    UserSignals,
    acceptance_rate,
    evaluate_kpis,
)
from ..metrics import EXTERNAL_METRIC_KEYS, KNOWN_METRIC_KEYS, MetricConfig
from ..pipeline import Pipeline, PolicyState, WorkflowSettings
from ..ruledsl import ThresholdTable, evaluate, lint, parse_rules, resolve
from ..workflow import GovernancePolicy
from .. import kpi as kpi_mod

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INTERNAL = 2


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_config(path: str | None) -> dict:
    if path:
        return load_kv(path)
    env = os.environ.get("ACCESSLOOP_CONFIG")
    if env:
        return load_kv(env)
    return parse_kv(bundled.demo_config_text())


def _known_keys() -> set[str]:
    return set(KNOWN_METRIC_KEYS) | set(kpi_mod.KNOWN_KPI_KEYS)


def _cmd_rule_lint(args: argparse.Namespace) -> int:
    rules = parse_rules(_read(args.file))
    symbols: set[str] = set()
    if args.thresholds:
        symbols = ThresholdTable.from_kv(load_kv(args.thresholds)).symbols()
    else:
        symbols = ThresholdTable.from_kv(_load_config(args.config)).symbols()
    diags = lint(rules, _known_keys(), external_keys=set(EXTERNAL_METRIC_KEYS),
                 symbols=symbols)
    for diag in diags:
        print(diag.render())
    worst = any(d.severity in ("warning", "error") for d in diags)
    if not diags:
        print(f"ok: {len(rules.rules)} rule(s), no findings")
    return EXIT_VALIDATION if worst else EXIT_OK


def _cmd_rule_eval(args: argparse.Namespace) -> int:
    rules = parse_rules(_read(args.file))
    kv = load_kv(args.thresholds) if args.thresholds else _load_config(args.config)
    table = ThresholdTable.from_kv(kv)
    resolved = resolve(rules, table, args.profile, args.domain)
    bindings: dict[str, float] = {}
    for spec in args.bind or []:
        key, _, value = spec.partition("=")
        if not key or not value:
            print(f"bad --bind {spec!r}, expected key=value", file=sys.stderr)
            return EXIT_VALIDATION
        try:
            bindings[key] = float(value)
        except ValueError:
            print(f"bad --bind value {value!r} for {key}", file=sys.stderr)
            return EXIT_VALIDATION
    outcome = evaluate(resolved, bindings)
    for trace in outcome.trace:
        print(trace.rationale)
    for rid, _values in outcome.fired:
        rule = next(r for r in resolved.rules if r.rule_id == rid)
        print(f"{rid} FIRED → {rule.action.display()}")
    if not outcome.fired:
        print("no rules fired")
    if outcome.indeterminate:
        rows = ", ".join(f"{rid} (missing: {', '.join(keys)})"
                         for rid, keys in outcome.indeterminate)
        print(f"indeterminate: {rows}")
    return EXIT_OK


def _cmd_audit_verify(args: argparse.Namespace) -> int:
    with open(args.file, "rb") as fh:
        data = fh.read()
    try:
        count = verify_export(data)
    except CorruptLog as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"OK: {count} event(s), chain verified")
    return EXIT_OK


def _cmd_audit_export(args: argparse.Namespace) -> int:
    log = AuditLog(FileStore(args.log))
    upper = args.to if args.to is not None else len(log.rows())
    data = log.export(args.frm, upper, args.role)
    sys.stdout.write(data.decode("utf-8"))
    return EXIT_OK


def _cmd_kpi_report(args: argparse.Namespace) -> int:
    records = [json.loads(line) for line in _read(args.signals).splitlines() if line.strip()]
    signals = UserSignals.from_jsonl_records(records)
    config = KpiConfig.from_kv(_load_config(args.config))
    profiles = sorted({j.profile for j in signals.judgments})
    for profile in profiles:
        rates = {cat: acceptance_rate(signals.judgments, profile, cat)
                 for cat in JUDGMENT_CATEGORIES + ("at_least_one",)}
        cells = "  ".join(f"{cat}={rates[cat]:.3f}" for cat in rates)
        print(f"acceptance[{profile}]: {cells}")
    reported = set()
    for profile in profiles or ["default"]:
        for rec in evaluate_kpis(signals, None, config, profile):
            key = (rec.kpi_id, rec.profile)
            if key in reported:
                continue
            reported.add(key)
            mark = "satisfied" if rec.satisfied else "not satisfied"
            print(f"{rec.kpi_id}[{rec.profile}] = {rec.value:.3f} ({mark})")
    return EXIT_OK


def _build_pipeline_from_files(args: argparse.Namespace) -> Pipeline:
    kv = _load_config(args.config)
    rules_text = _read(args.rules) if args.rules else bundled.default_rules_text()
    thresholds = ThresholdTable.from_kv(load_kv(args.thresholds)) if args.thresholds \
        else ThresholdTable.from_kv(kv)
    policy = PolicyState(
        rules=parse_rules(rules_text),
        thresholds=thresholds,
        governance=GovernancePolicy.from_kv(kv),
        kpi=KpiConfig.from_kv(kv),
        metrics=MetricConfig.from_kv(kv),
        settings=WorkflowSettings.from_kv(kv),
    )
    return Pipeline(policy, log=AuditLog(MemoryStore()))


def _cmd_run(args: argparse.Namespace) -> int:
    pipe = _build_pipeline_from_files(args)
    results = []
    for lineno, line in enumerate(_read(args.input).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            item = pipe.submit(
                row["source"], row.get("candidate"),
                row.get("profile", "default"), row.get("domain", "general"),
                references=tuple(row.get("references", [])),
                extra_metrics=row.get("extra_metrics") or None,
                item_id=row.get("id"),
            )
            decision = pipe.process(item.item_id)
        except (KeyError, ValueError, AccessLoopError, json.JSONDecodeError) as exc:
            print(f"line {lineno}: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        results.append({
            "id": item.item_id,
            "state": item.state.value,
            "action": decision.action,
            "reasons": list(decision.reasons),
            "cqi": item.cqi,
            "bindings": item.snapshot.bindings() if item.snapshot else {},
        })
    out = "".join(json.dumps(r, sort_keys=True) + "\n" for r in results)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    escalated = sum(1 for r in results if r["action"] == "escalate")
    print(f"processed {len(results)} item(s), {escalated} escalated", file=sys.stderr)
    return EXIT_OK


def _cmd_scenario(args: argparse.Namespace) -> int:
    from .. import scenario as scenario_mod

    if args.name != scenario_mod.SCENARIO_ID:
        print(f"unknown scenario {args.name!r}; available: {scenario_mod.SCENARIO_ID}",
              file=sys.stderr)
        return EXIT_VALIDATION
    result = scenario_mod.run_scenario()
    for line in result.trace_lines:
        print(line)
    return EXIT_OK


def _parse_tokens(kv: dict) -> dict:
    """gateway.tokens = token:role[:reviewer_id], comma separated."""
    from .http import Session

    tokens = {}
    raw = kv.get("gateway.tokens", [])
    if isinstance(raw, str):
        raw = [raw]
    for entry in raw:
        parts = entry.split(":")
        if len(parts) == 2:
            tokens[parts[0]] = Session(role=parts[1])
        elif len(parts) == 3:
            tokens[parts[0]] = Session(role=parts[1], reviewer_id=parts[2])
    return tokens


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .http import create_app

    kv = _load_config(args.config)
    pipe = _build_pipeline_from_files(args)
    if args.seed_scenario:
        from .. import scenario as scenario_mod

        pipe = scenario_mod.build_pipeline()
        pipe.policy.governance = GovernancePolicy.from_kv(kv).validate()
        item = pipe.submit(
            scenario_mod.SOURCE_TEXT, scenario_mod.CANDIDATE_TEXT,
            scenario_mod.PROFILE, scenario_mod.DOMAIN,
            extra_metrics=scenario_mod.EXTERNAL_SCORES,
        )
        pipe.process(item.item_id)
    tokens = _parse_tokens(kv)
    if not tokens:
        print("no gateway.tokens configured; all requests will be rejected",
              file=sys.stderr)
    listen = args.listen or os.environ.get("ACCESSLOOP_LISTEN", "127.0.0.1:8000")
    host, _, port = listen.partition(":")
    app = create_app(pipe, tokens)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or "8000"),
                log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="accessloop")
    parser.add_argument("--config", help="structured key-value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="batch pipeline over a JSON-lines file")
    p_run.add_argument("--input", required=True)
    p_run.add_argument("--rules")
    p_run.add_argument("--thresholds")
    p_run.add_argument("--out")
    p_run.set_defaults(func=_cmd_run)

    p_rule = sub.add_parser("rule", help="rule file tools")
    rule_sub = p_rule.add_subparsers(dest="rule_command", required=True)
    p_lint = rule_sub.add_parser("lint")
    p_lint.add_argument("file")
    p_lint.add_argument("--thresholds")
    p_lint.set_defaults(func=_cmd_rule_lint)
    p_eval = rule_sub.add_parser("eval")
    p_eval.add_argument("file")
    p_eval.add_argument("--bind", action="append", metavar="KEY=VALUE")
    p_eval.add_argument("--thresholds")
    p_eval.add_argument("--profile", default="*")
    p_eval.add_argument("--domain", default="*")
    p_eval.set_defaults(func=_cmd_rule_eval)

    p_audit = sub.add_parser("audit", help="audit log tools")
    audit_sub = p_audit.add_subparsers(dest="audit_command", required=True)
    p_verify = audit_sub.add_parser("verify")
    p_verify.add_argument("file")
    p_verify.set_defaults(func=_cmd_audit_verify)
    p_export = audit_sub.add_parser("export")
    p_export.add_argument("--log", required=True)
    p_export.add_argument("--from", dest="frm", type=int, default=1)
    p_export.add_argument("--to", dest="to", type=int)
    p_export.add_argument("--role", default="auditor",
                          choices=["auditor", "operator", "public"])
    p_export.set_defaults(func=_cmd_audit_export)

    p_kpi = sub.add_parser("kpi", help="indicator reports")
    kpi_sub = p_kpi.add_subparsers(dest="kpi_command", required=True)
    p_report = kpi_sub.add_parser("report")
    p_report.add_argument("--signals", required=True)
    p_report.set_defaults(func=_cmd_kpi_report)

    p_scenario = sub.add_parser("scenario", help="run a bundled demo scenario")
    p_scenario.add_argument("name")
    p_scenario.set_defaults(func=_cmd_scenario)

    p_serve = sub.add_parser("serve", help="start the HTTP gateway")
    p_serve.add_argument("--listen")
    p_serve.add_argument("--rules")
    p_serve.add_argument("--thresholds")
    p_serve.add_argument("--seed-scenario", action="store_true")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RuleDslError, AccessLoopError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
