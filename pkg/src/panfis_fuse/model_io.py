"""Line-oriented text format for rule bases.

::

    PANFIS-FUSE v1 p=<p> classes=<C> rules=<R>
    N=<support>                      # per rule:
    <p center values>
    <p lines of p inverse-dispersion values>
    <p + 1 lines of C consequent values>

Floats are written with 17 significant digits, which round-trips IEEE doubles
exactly. RLS covariances are learner-local and are not stored.
"""
from __future__ import annotations

import re

import numpy as np

from .exceptions import FormatError, NumericError, UsageError
from .rule_model import Rule, RuleBase

MAGIC = "PANFIS-FUSE"
VERSION = "v1"
_HEADER = re.compile(r"^PANFIS-FUSE (\S+) p=(\d+) classes=(\d+) rules=(\d+)$")


def _fmt(values):
    return " ".join(f"{float(v):.17g}" for v in values)


def dumps_model(base: RuleBase) -> str:
    lines = [f"{MAGIC} {VERSION} p={base.p} classes={base.n_classes} rules={len(base)}"]
    for r in base.rules:
        lines.append(f"N={r.support}")
        lines.append(_fmt(r.center))
        lines.extend(_fmt(row) for row in r.inv_dispersion)
        lines.extend(_fmt(row) for row in r.consequent)
    return "\n".join(lines) + "\n"


def save_model(base: RuleBase, path):
    with open(path, "w") as fh:
        fh.write(dumps_model(base))


def loads_model(text: str, rls_init=1e5) -> RuleBase:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty model file")
    m = _HEADER.match(lines[0])
    if not m:
        raise FormatError(f"bad header: {lines[0]!r}")
    version, p, c, n_rules = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if version != VERSION:
        raise FormatError(f"unsupported model version {version}")
    if p < 1 or c < 1:
        raise FormatError("p and classes must be positive")
    per_rule = 1 + 1 + p + (p + 1)
    body = lines[1:]
    if len(body) != n_rules * per_rule:
        raise FormatError(
            f"header declares {n_rules} rules ({n_rules * per_rule} lines) "
            f"but the body has {len(body)} lines"
        )

    def row(line, width, what, idx):
        try:
            vals = [float(v) for v in line.split()]
        except ValueError:
            raise FormatError(f"rule {idx}: non-numeric {what}") from None
        if len(vals) != width:
            raise FormatError(f"rule {idx}: {what} needs {width} values, got {len(vals)}")
        return vals

    rules = []
    for i in range(n_rules):
        chunk = body[i * per_rule:(i + 1) * per_rule]
        if not chunk[0].startswith("N="):
            raise FormatError(f"rule {i}: expected 'N=<support>'")
        try:
            support = int(chunk[0][2:])
        except ValueError:
            raise FormatError(f"rule {i}: bad support {chunk[0]!r}") from None
        center = row(chunk[1], p, "center", i)
        inv = [row(chunk[2 + j], p, "inv_dispersion row", i) for j in range(p)]
        cons = [row(chunk[2 + p + j], c, "consequent row", i) for j in range(p + 1)]
        try:
            rules.append(Rule(np.array(center), np.array(inv), support, np.array(cons), rls_init * np.eye(p + 1)))
        except (NumericError, UsageError) as exc:
            raise FormatError(f"rule {i}: {exc}") from None
    return RuleBase(tuple(rules), p, c, origin="file")


def load_model(path, rls_init=1e5) -> RuleBase:
    with open(path) as fh:
        return loads_model(fh.read(), rls_init)
