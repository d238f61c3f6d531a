"""Smoke test for the mqm_eval extension, the mqm binary and the HTTP service.

Run after `pip install --no-build-isolation crates/python` and
`cargo build -p mqm-cli`:

    python3 python/smoke_test.py
"""

import itertools
import json
import os
import random
import subprocess
import sys
import tempfile
import urllib.error
import urllib.request
from pathlib import Path

import jsonschema
from scipy import stats

import mqm_eval

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
SCHEMAS = ROOT / "docs" / "schemas"
MQM = Path(os.environ.get("MQM_BIN", ROOT / "target" / "debug" / "mqm"))

failures = []


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}")
    if not ok:
        failures.append(name)


def conforms(schema, value):
    doc = json.loads((SCHEMAS / f"{schema}.schema.json").read_text())
    errors = list(jsonschema.Draft202012Validator(doc).iter_errors(value))
    check(f"schema {schema}", not errors, "; ".join(e.message[:120] for e in errors[:3]))


def brute_gamma(x, y):
    c = d = 0
    for i, j in itertools.combinations(range(len(x)), 2):
        s = (x[i] - x[j]) * (y[i] - y[j])
        c += s > 0
        d += s < 0
    return (c - d) / (c + d)


def module_checks():
    nilin = (FIX / "golden" / "nilin.mqm").read_text()
    row = mqm_eval.score(nilin)[0]
    check("nilin score", (row["accuracy"], row["fluency"], row["style"], row["total"]) == (11, 6, 5, 22), str(row))

    blocks = mqm_eval.parse(nilin)
    conforms("parsed_document", blocks)
    again = mqm_eval.score(mqm_eval.canonicalize(nilin))
    check("canonical round trip", again == mqm_eval.score(nilin))

    ann = blocks[0]["annotation"]
    check("score_annotation", mqm_eval.score_annotation(ann)["total"] == 22)

    bad = nilin.replace("And(omission", "Qqq(omission", 1)
    v = mqm_eval.validate(bad)
    conforms("validation_report", v)
    check("validate span", v and v[0]["violations"][0]["code"] == "SPAN_NOT_FOUND")

    rng = random.Random(5)
    worst_b = worst_5 = 0.0
    for _ in range(50):
        n = rng.randint(10, 60)
        x = [rng.randint(0, 6) for _ in range(n)]
        y = [rng.randint(0, 6) + 0.5 * a for a in x]
        b = mqm_eval.kendall_tau(x, y, "tau_b")
        e = mqm_eval.kendall_tau(x, y, "gamma")
        worst_b = max(worst_b, abs(b["tau"] - stats.kendalltau(x, y, variant="b").statistic))
        worst_5 = max(worst_5, abs(e["tau"] - brute_gamma(x, y)))
        p = stats.norm.sf(abs(3 * e["tau"] * (n * (n - 1)) ** 0.5 / (2 * (2 * n + 5)) ** 0.5)) * 2
        if abs(e["p_value"] - p) > 1e-9:
            check("p-value", False, f"{e['p_value']} vs {p}")
            break
    check("tau_b vs scipy", worst_b < 1e-12, f"max err {worst_b:.1e}")
    check("gamma vs brute force", worst_5 < 1e-12, f"max err {worst_5:.1e}")

    check("bleu identical", abs(mqm_eval.sentence_bleu("a b c d e", "a b c d e") - 1.0) < 1e-12)
    check("chrf identical", abs(mqm_eval.chrf("the cat sat", "the cat sat") - 1.0) < 1e-12)
    check("chrf disjoint", mqm_eval.chrf("xyz", "abc") == 0.0)
    try:
        mqm_eval.kendall_tau([1, 2], [1], "gamma")
        check("length mismatch raises", False)
    except ValueError:
        check("length mismatch raises", True)


def cli(*args, ok=(0,), cwd=None):
    p = subprocess.run([str(MQM), "--format", "json", *args], capture_output=True, text=True, cwd=cwd)
    if p.returncode not in ok:
        check(f"mqm {args[0]}", False, p.stderr.strip()[-300:])
        return None
    return json.loads(p.stdout)


def cli_checks(tmp):
    conforms("score_report", cli("score", "-a", FIX / "golden" / "golden.mqm"))
    conforms("parsed_document", cli("parse", "--input", FIX / "golden" / "golden.mqm"))
    bad = tmp / "bad.mqm"
    bad.write_text((FIX / "golden" / "nilin.mqm").read_text().replace("And(omission", "Qqq(omission", 1))
    conforms("validation_report", cli("validate", "--input", bad, ok=(1,)))
    conforms("metrics_table", cli("metrics", "--input", FIX / "annotated_100.jsonl", "-o", tmp / "m.tsv"))
    conforms("correlation_matrix", cli("corr", "--input", tmp / "m.tsv"))
    conforms("agreement_report", cli("agree", "--primary", FIX / "annotated_100.mqm",
                                     "--validator", FIX / "annotated_100.mqm", "--validator", FIX / "annotated_100.jsonl"))
    conforms("corpus_stats", cli("stats", "--input", FIX / "mixed_20.jsonl"))
    conforms("split_summary", cli("split", "--input", FIX / "synthetic_1200.jsonl", "--out-dir", tmp / "sp"))
    conforms("train_summary", cli("train", "--train", tmp / "sp" / "train.jsonl", "--model-out", tmp / "model.json"))
    conforms("eval_report", cli("eval", "--model", tmp / "model.json", "--test", tmp / "sp" / "test.jsonl"))
    conforms("experiment_tables", cli("experiments", "--synthetic", "150", "--seeds", "0,1",
                                      "--train-sizes", "50,100", "--epochs", "5"))
    conforms("build_summary", cli("build-dataset", "--input", FIX / "parallel_10.tsv", "-o", tmp / "built.jsonl"))
    for path in (FIX / "mixed_20.jsonl", tmp / "built.jsonl", tmp / "sp" / "test.jsonl"):
        for line in path.read_text().splitlines()[:20]:
            conforms("dataset_record", json.loads(line))


def http(method, url, body=None, headers=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method, headers={"content-type": "application/json", **(headers or {})})
    try:
        with urllib.request.urlopen(req) as r:
            return r.status, json.loads(r.read() or b"null")
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def service_checks(tmp):
    proc = subprocess.Popen([str(MQM), "serve", "--data", str(FIX / "mixed_20.jsonl"), "--state-dir", str(tmp / "state"),
                             "--port", "0"], stdout=subprocess.PIPE, text=True)
    try:
        url = proc.stdout.readline().split()[-1]
        code, page = http("GET", url + "/units?limit=5")
        conforms("api_unit_page", page)
        uid = page["items"][0]["unit_id"]
        code, detail = http("GET", f"{url}/units/{uid}")
        conforms("api_unit_detail", detail)
        word = detail["unit"]["hypothesis"].split()[0]
        body = {"errors": [{"dimension": "fluency", "subtype": "grammar", "severity": "major", "span_text": word}]}
        conforms("api_annotation_body", body)
        code, preview = http("POST", f"{url}/units/{uid}/preview-score", body)
        conforms("api_preview_score", preview)
        check("preview score", code == 200 and preview["total"] == 5, str(preview))
        code, written = http("PUT", f"{url}/units/{uid}/annotation", body, {"x-annotator-id": "smoke"})
        check("write", code == 200, str(written)[:200])
        conforms("api_write_response", written)
        code, stale = http("PUT", f"{url}/units/{uid}/annotation", {**body, "revision": 0}, {"x-annotator-id": "smoke"})
        check("stale revision", code == 409)
        conforms("api_error", stale)
        wrong = {"errors": [{**body["errors"][0], "subtype": "omission"}]}
        code, invalid = http("PUT", f"{url}/units/{uid}/annotation", wrong, {"x-annotator-id": "smoke"})
        check("invalid annotation", code == 422)
        conforms("api_error", invalid)
        code, progress = http("GET", url + "/progress")
        conforms("api_progress", progress)
        check("progress", progress["done"] == 1 and progress["by_annotator"] == {"smoke": 1}, str(progress))
    finally:
        proc.kill()
        proc.wait()


def main():
    module_checks()
    if MQM.exists():
        with tempfile.TemporaryDirectory() as d:
            cli_checks(Path(d))
            service_checks(Path(d))
    else:
        print(f"skip CLI and service checks: {MQM} not built")
    print(f"{'FAILED' if failures else 'passed'}: {len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
