#!/usr/bin/env python3
"""Runs every varseq command with --format json and validates the output against the schema."""

import json
import os
import subprocess
import sys
import tempfile

import jsonschema

CASES = [
    ("el", "quantum.jv", [], None),
    ("helmholtz", "helmholtz.jv", [], None),
    ("helmholtz-reduced", "helmholtz.jv", [], None),
    ("cartan", "mechanics.jv", ["lamL"], None),
    ("cartan", "cartan3.jv", [], None),
    ("lepage-check", "mechanics.jv", ["lam"], None),
    ("lepage", "mechanics.jv", ["epsE"], None),
    ("tonti", "mechanics.jv", ["eps"], None),
    ("trivial", "mechanics.jv", ["eps"], None),
    ("noether", "mechanics.jv", ["lam"], "time"),
    ("first-variation", "mechanics.jv", ["lam"], "translation"),
    ("lie", "mechanics.jv", ["lam"], "scaling"),
    ("class-eq", "mechanics.jv", ["lam", "lam"], None),
    ("probe", "mechanics.jv", ["lam", "lamL"], None),
    ("probe", "mechanics.jv", ["lam", "lam"], None),
    ("interior-euler", "mechanics.jv", ["rho"], None),
    ("residual", "mechanics.jv", ["rho"], None),
    # error envelopes
    ("el", "mechanics.jv", ["eps"], None),
    ("el", "mechanics.jv", ["nope"], None),
    ("tonti", "helmholtz.jv", [], None),
]

BAD_MODEL = "space { base t; fibre q; }\nform f : degree 1 order 1 = qdd dt;\n"


def run(cli, args):
    proc = subprocess.run([cli] + args + ["--format", "json"], capture_output=True, text=True)
    return proc.returncode, json.loads(proc.stdout)


def main():
    cli, samples, schema_path = sys.argv[1:4]
    with open(schema_path) as f:
        schema = json.load(f)
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    runs = []
    for command, model, forms, field in CASES:
        args = [command, os.path.join(samples, model)]
        for name in forms:
            args += ["--form", name]
        if field:
            args += ["--field", field]
        runs.append(args)
    with tempfile.NamedTemporaryFile("w", suffix=".jv", delete=False) as f:
        f.write(BAD_MODEL)
        bad = f.name
    runs.append(["el", bad])
    try:
        for args in runs:
            code, doc = run(cli, args)
            errors = list(validator.iter_errors(doc))
            expect_error = code != 0
            if errors or (doc["status"] == "error") != expect_error:
                failures += 1
                print("FAIL", " ".join(args), [e.message for e in errors])
            else:
                print("ok  ", " ".join(args))
    finally:
        os.unlink(bad)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
