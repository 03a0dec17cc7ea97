#!/usr/bin/env python3
"""Minimal wire-protocol endpoint: echoes every expression back.

Speaks newline-delimited JSON on stdin/stdout, one request per line:
usable as ``--translator "external:python3 scripts/echo_endpoint.py"``.
"""

import json
import sys

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    try:
        request = json.loads(line)
        response = {"expression_stex": request["expression_latex"],
                    "terminated": True}
    except (json.JSONDecodeError, KeyError) as exc:
        response = {"error": f"bad request: {exc}"}
    print(json.dumps(response), flush=True)
