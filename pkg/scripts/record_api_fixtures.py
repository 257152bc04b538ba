#!/usr/bin/env python3
"""Record real HTTP API payloads for the web UI's contract tests.

Drives the service in-process with the scripted fixture transcripts, captures
the JSON the endpoints actually return, and writes it (with session ids and
timestamps normalized, since both vary per recording) to
frontend/tests/fixtures/.
"""

import json
import sys
import tempfile
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from fastapi.testclient import TestClient  # noqa: E402

from clarify_plan.llm import ScriptedBackend  # noqa: E402
from clarify_plan.service import create_app  # noqa: E402

FIXTURES = ROOT / "fixtures"
OUT = ROOT / "frontend" / "tests" / "fixtures"

FIXED_TS = "1970-01-01T00:00:00+00:00"


def load_script(name):
    with open(FIXTURES / "scripts" / name, encoding="utf-8") as fh:
        return json.load(fh)


def normalize(payload, session_id_map):
    if isinstance(payload, dict):
        out = {}
        for key, value in payload.items():
            if key == "session_id" and value in session_id_map:
                out[key] = session_id_map[value]
            elif key == "ts":
                out[key] = FIXED_TS
            else:
                out[key] = normalize(value, session_id_map)
        return out
    if isinstance(payload, list):
        return [normalize(v, session_id_map) for v in payload]
    return payload


def write(name, payload, session_id_map):
    path = OUT / name
    with open(path, "w", encoding="utf-8") as fh:
        # no sort_keys: the UI's column ordering contract depends on the key
        # order the API actually emits
        json.dump(normalize(payload, session_id_map), fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print(f"wrote {path.relative_to(ROOT)}")


def wait_for(client, sid, predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        view = client.get(f"/sessions/{sid}").json()
        if predicate(view):
            return view
        time.sleep(0.01)
    raise RuntimeError("session never reached the expected state")


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    ids = {}

    with tempfile.TemporaryDirectory() as tmp:
        responses = load_script("egg_trial1.json")
        app = create_app(
            store_dir=f"{tmp}/a",
            backend_factory=lambda config: ScriptedBackend(responses=list(responses)),
        )
        with TestClient(app) as client:
            created = client.post("/sessions", json={"command": "Make scrambled egg."})
            assert created.status_code == 201, created.text
            sid = created.json()["session_id"]
            ids[sid] = "ui-fixture-egg"
            write("create_session.json", created.json(), ids)

            view = wait_for(client, sid, lambda v: v["phase"] == "AwaitAnswers")
            write("view_awaiting.json", view, ids)
            write(
                "events_awaiting.json",
                client.get(f"/sessions/{sid}/events?mode=poll&after=0").json(),
                ids,
            )

            answered = client.post(
                f"/sessions/{sid}/answers",
                json={
                    "answers": [
                        {"question_id": "q1", "text": "In the refrigerator."},
                        {"question_id": "q2", "text": "About 3 minutes."},
                        {"question_id": "q3", "text": "Put it on a plate and bring it to me."},
                    ]
                },
            )
            assert answered.status_code == 202, answered.text
            write("answers_accepted.json", answered.json(), ids)

            view = wait_for(client, sid, lambda v: v["status"] is not None)
            write("view_done.json", view, ids)
            write(
                "diff_1_2.json",
                client.get(f"/sessions/{sid}/diff?from=1&to=2").json(),
                ids,
            )
            write(
                "diff_empty.json",
                client.get(f"/sessions/{sid}/diff?from=2&to=2").json(),
                ids,
            )
            write(
                "events_done.json",
                client.get(f"/sessions/{sid}/events?mode=poll&after=0").json(),
                ids,
            )
            rejected = client.post(
                f"/sessions/{sid}/answers",
                json={"answers": [{"question_id": "q9", "text": "too late"}]},
            )
            assert rejected.status_code == 409, rejected.text
            write(
                "answers_conflict.json",
                {"status": 409, "body": rejected.json()},
                ids,
            )

        truncated_responses = load_script("truncated_demo.json")
        app = create_app(
            store_dir=f"{tmp}/b",
            backend_factory=lambda config: ScriptedBackend(responses=list(truncated_responses)),
        )
        with TestClient(app) as client:
            created = client.post(
                "/sessions",
                json={
                    "command": "Arrange the books on the shelf.",
                    "config": {"max_iterations": 2},
                },
            )
            assert created.status_code == 201
            sid = created.json()["session_id"]
            ids[sid] = "ui-fixture-truncated"
            wait_for(client, sid, lambda v: v["phase"] == "AwaitAnswers")
            client.post(
                f"/sessions/{sid}/answers",
                json={"answers": [{"question_id": "q1", "text": "By height, tallest on the left."}]},
            )
            view = wait_for(client, sid, lambda v: v["status"] is not None)
            assert view["status"] == "Truncated"
            write("view_truncated.json", view, ids)

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
