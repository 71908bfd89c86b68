"""Structured key-value configuration files.

One flat format serves every config surface: dotted key paths on the left,
scalar or comma-list values on the right, `#` comments. A single file can
hold the metrics, kpi, governance, thresholds and gateway sections at once;
each loader picks out its own prefix.

    metrics.readability.language = es
    kpi.gamma = 0.75
    governance.high_risk_domains = health_dosage, legal_warning
    thresholds.*.*.theta_dsari = 0.35
"""

from __future__ import annotations

from .errors import ConfigError

Value = str | float | bool | list[str]


def parse_kv(text: str) -> dict[str, Value]:
    """Parse key-value text into a flat dict keyed by dotted path."""
    out: dict[str, Value] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _coerce(value.strip())
    return out


def _coerce(raw: str) -> Value:
    if "," in raw:
        return [part.strip() for part in raw.split(",") if part.strip()]
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return float(raw)
    except ValueError:
        return raw


def load_kv(path: str) -> dict[str, Value]:
    with open(path, encoding="utf-8") as fh:
        return parse_kv(fh.read())


def section(kv: dict[str, Value], prefix: str) -> dict[str, Value]:
    """Sub-dict of keys under `prefix.`, with the prefix stripped."""
    cut = len(prefix) + 1
    return {k[cut:]: v for k, v in kv.items() if k.startswith(prefix + ".")}


def get_float(kv: dict[str, Value], key: str, default: float) -> float:
    value = kv.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def get_str(kv: dict[str, Value], key: str, default: str) -> str:
    value = kv.get(key, default)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def get_bool(kv: dict[str, Value], key: str, default: bool) -> bool:
    value = kv.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    return value


def get_list(kv: dict[str, Value], key: str, default: list[str] | None = None) -> list[str]:
    value = kv.get(key)
    if value is None:
        return list(default or [])
    if isinstance(value, str):
        return [value] if value else []
    if isinstance(value, list):
        return value
    raise ConfigError(f"{key}: expected a comma list, got {value!r}")
