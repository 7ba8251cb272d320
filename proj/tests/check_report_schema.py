"""Runs the CLI in its JSON modes and validates every document against the
shipped schema."""
import json
import os
import subprocess
import sys
import tempfile

import jsonschema

tool, schema_path = sys.argv[1], sys.argv[2]
with open(schema_path) as f:
    schema = json.load(f)
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)

header = "SNP\tbeta.exposure\tse.exposure\tbeta.outcome\tse.outcome\tbeta.selection\tse.selection\n"
rows = []
for j in range(60):
    g = 0.02 + 0.001 * j if j % 3 else 0.0005 * (j % 5)
    rows.append(f"rs{j}\t{g}\t0.01\t{0.4 * g + 0.001 * ((j % 7) - 3)}\t0.01\t{g * 1.1}\t0.01\n")

failures = 0
with tempfile.TemporaryDirectory() as tmp:
    data = os.path.join(tmp, "data.tsv")
    with open(data, "w") as f:
        f.write(header + "".join(rows))
    one = os.path.join(tmp, "one.tsv")
    with open(one, "w") as f:
        f.write(header.rsplit("\tbeta.selection", 1)[0] + "\nrs1\t2\t1\t1\t1\n")
    params = os.path.join(tmp, "s2.params")
    runs = [
        ["analyze", data],
        ["analyze", data, "--lambda", "mr-eo", "--pleiotropy"],
        ["analyze", data, "--lambda", "sqrt2logp", "--method", "divw"],
        ["analyze", one, "--method", "ivw"],
        ["diagnose", data],
        ["diagnose", data, "--pleiotropy", "--lambda", "2.5"],
        ["diagnose", one],
        ["oracle", "--case", "4", "--lambda", "3.9"],
        ["simulate", "--case", "s2:0.25", "--reps", "1", "--methods", "divw:0", "--dump-params", params],
        ["oracle", "--params", params],
    ]
    for args in runs:
        cmd = [tool] + args
        if args[0] != "simulate":
            cmd += ["--format", "json"]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            print("FAIL", " ".join(args), "exit", proc.returncode, proc.stderr.strip())
            failures += 1
            continue
        if args[0] == "simulate":
            continue
        doc = json.loads(proc.stdout)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        if errors:
            failures += 1
            print("FAIL", " ".join(args))
            for e in errors[:5]:
                print("   ", list(e.path), e.message[:200])
        else:
            print("ok  ", " ".join(args))

    # the schema must reject a renamed field
    doc = json.loads(subprocess.run([tool, "analyze", one, "--format", "json"], capture_output=True, text=True).stdout)
    doc["estimates"][0]["beta"] = doc["estimates"][0].pop("beta_hat")
    if validator.is_valid(doc):
        print("FAIL schema accepted a renamed field")
        failures += 1

sys.exit(1 if failures else 0)
