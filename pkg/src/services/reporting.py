from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, is_dataclass
from typing import Any, Dict, Iterable, Sequence, TextIO, Tuple

from .. import __version__
from ..dynamics.lattice import LatticeFunction
from ..errors import ConfigError

Row = Dict[str, Any]


def format_number(value: float) -> str:
    return f"{float(value):.17g}"


def format_site(site: Sequence[int]) -> str:
    return ";".join(str(int(v)) for v in site)


def format_complex(value: complex) -> str:
    value = complex(value)
    return f"{value.real:.17g}{value.imag:+.17g}i"


def parse_site(text: str, d: int | None = None) -> Tuple[int, ...]:
    try:
        site = tuple(int(part) for part in str(text).strip().split(";"))
    except ValueError as exc:
        raise ConfigError(f"invalid lattice site {text!r}; expected integers joined by ';'") from exc
    if d is not None and len(site) != d:
        raise ConfigError(f"site {text!r} has {len(site)} coordinates, expected {d}")
    return site


def parse_complex(text: str) -> complex:
    literal = str(text).strip().replace(" ", "")
    if literal.endswith("i"):
        literal = literal[:-1] + "j"
    try:
        return complex(literal)
    except ValueError as exc:
        raise ConfigError(f"invalid complex literal {text!r}; expected e.g. 0.5-1.25i") from exc


def parse_probe(text: str, d: int) -> LatticeFunction:
    """Parse "site=value,site=value" (e.g. "0;0=1,3;-2=0.5-1.25i"); a bare site means value 1."""
    entries: Dict[Tuple[int, ...], complex] = {}
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        site_text, _, value_text = item.partition("=")
        site = parse_site(site_text, d)
        value = parse_complex(value_text) if value_text else 1.0 + 0j
        entries[site] = entries.get(site, 0j) + value
    if not entries:
        raise ConfigError(f"probe {text!r} has no entries")
    return LatticeFunction(entries, d)


def format_probe(f: LatticeFunction) -> str:
    return ",".join(f"{format_site(site)}={format_complex(value)}" for site, value in sorted(f))


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_number(value)
    if isinstance(value, complex):
        return format_complex(value)
    if isinstance(value, (tuple, list)):
        return ";".join(_cell(v) for v in value)
    if value is None:
        return ""
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, complex):
        return format_complex(value)
    if isinstance(value, tuple) and all(isinstance(v, int) for v in value):
        return format_site(value)
    if isinstance(value, (tuple, list)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    if is_dataclass(value):
        return _json_value(asdict(value))
    if isinstance(value, float) and not math.isfinite(value):
        return format_number(value)
    if hasattr(value, "tolist"):
        return _json_value(value.tolist())
    return value


def write_csv(rows: Iterable[Row], stream: TextIO, columns: Sequence[str] | None = None) -> None:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])


def write_checks(checks: Iterable[Any], stream: TextIO) -> None:
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        stream.write(f"# {status} {check.name}: {check.detail}\n")


def build_document(config: Dict[str, Any], rows: Iterable[Row], checks: Iterable[Any] = ()) -> Dict[str, Any]:
    return {
        "config": _json_value(config),
        "results": [_json_value(row) for row in rows],
        "checks": [
            {"name": c.name, "passed": bool(c.passed), "detail": c.detail} for c in checks
        ],
        "version": __version__,
    }


def write_json(
    config: Dict[str, Any], rows: Iterable[Row], stream: TextIO, checks: Iterable[Any] = ()
) -> None:
    json.dump(build_document(config, rows, checks), stream, indent=2)
    stream.write("\n")

