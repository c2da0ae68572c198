from __future__ import annotations

import base64
import time

import pytest
from fastapi.testclient import TestClient

from layouteval import ClassRegistry, decode_label_image, evaluate
from layouteval.codec import GROUND_TRUTH, PREDICTION
from layouteval.report import metric_dict, metric_names
from layouteval.service import create_app

from helpers import png_from_values

GT_VALUES = [[0x01, 0x0A], [0x04, 0x08]]
PRED_VALUES = [[0x01, 0x02], [0x04, 0x02]]


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def upload_body(**named_pngs: bytes) -> dict:
    return {
        "files": [
            {"name": name, "extension": "png", "value": b64(data)}
            for name, data in named_pngs.items()
        ]
    }


def wait_for_job(client: TestClient, job_id: str, timeout: float = 10.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        response = client.get(f"/jobs/{job_id}")
        assert response.status_code == 200
        body = response.json()
        if body["state"] in ("done", "failed"):
            return body
        time.sleep(0.01)
    raise AssertionError(f"job {job_id} did not finish within {timeout}s")


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "data", worker_count=2)
    with TestClient(app) as test_client:
        yield test_client


def submit_evaluation(client: TestClient, gt: str, hyp: str):
    return client.post(
        "/evaluation",
        json={"data": [{"gtCollection": gt, "hypothesisCollection": hyp}]},
    )


# --- uploads ------------------------------------------------------------------


def test_upload_returns_collection_name(client):
    response = client.post(
        "/collections",
        json=upload_body(a=png_from_values(GT_VALUES), b=png_from_values(PRED_VALUES)),
    )
    assert response.status_code == 201
    assert response.json()["collection"]


def test_upload_rejects_malformed_json(client):
    response = client.post(
        "/collections", content=b"{nope", headers={"content-type": "application/json"}
    )
    assert response.status_code == 400


def test_upload_rejects_empty_file_list(client):
    assert client.post("/collections", json={"files": []}).status_code == 400


def test_upload_rejects_bad_base64_and_persists_nothing(client, tmp_path):
    body = upload_body(good=png_from_values(GT_VALUES))
    body["files"].append({"name": "bad", "extension": "png", "value": "@@not-base64@@"})
    assert client.post("/collections", json=body).status_code == 400
    assert list((tmp_path / "data" / "collections").iterdir()) == []


def test_upload_rejects_undecodable_image_atomically(client, tmp_path):
    body = upload_body(good=png_from_values(GT_VALUES))
    body["files"].append(
        {"name": "broken", "extension": "png", "value": b64(b"junk bytes")}
    )
    assert client.post("/collections", json=body).status_code == 422
    assert list((tmp_path / "data" / "collections").iterdir()) == []


def test_upload_rejects_duplicate_entry_names(client):
    entry = {"name": "page", "extension": "png", "value": b64(png_from_values(GT_VALUES))}
    response = client.post("/collections", json={"files": [entry, dict(entry)]})
    assert response.status_code == 409


def test_upload_rejects_path_traversal_names(client):
    body = {
        "files": [
            {"name": "../escape", "extension": "png", "value": b64(png_from_values(GT_VALUES))}
        ]
    }
    assert client.post("/collections", json=body).status_code == 400


# --- evaluation ---------------------------------------------------------------


def _upload(client, **named) -> str:
    response = client.post("/collections", json=upload_body(**named))
    assert response.status_code == 201
    return response.json()["collection"]


def test_evaluation_unknown_collection_is_404(client):
    gt = _upload(client, page=png_from_values(GT_VALUES))
    assert submit_evaluation(client, gt, "cdeadbeef00").status_code == 404
    assert submit_evaluation(client, "nope", gt).status_code == 404


def test_evaluation_rejects_unpairable_names(client):
    gt = _upload(client, page1=png_from_values(GT_VALUES), page2=png_from_values(GT_VALUES))
    hyp = _upload(client, page1=png_from_values(PRED_VALUES))
    response = submit_evaluation(client, gt, hyp)
    assert response.status_code == 422
    assert "page2" in response.json()["error"]


def test_evaluation_rejects_malformed_body(client):
    assert client.post("/evaluation", json={"data": []}).status_code == 400
    assert client.post("/evaluation", json={"data": [{}, {}]}).status_code == 400
    assert client.post("/evaluation", json={}).status_code == 400


def test_evaluation_completes_with_full_metrics(client):
    gt = _upload(client, page=png_from_values(GT_VALUES))
    hyp = _upload(client, page=png_from_values(PRED_VALUES))
    response = submit_evaluation(client, gt, hyp)
    assert response.status_code == 202
    job = wait_for_job(client, response.json()["job"])
    assert job["state"] == "done"
    assert len(job["results"]) == 1
    result = job["results"][0]
    assert result["file"] == "page.png"

    registry = ClassRegistry.default()
    expected = metric_dict(
        evaluate(
            decode_label_image(png_from_values(GT_VALUES), registry, GROUND_TRUTH),
            decode_label_image(png_from_values(PRED_VALUES), registry, PREDICTION),
            registry,
        )
    )
    assert result["metrics"] == expected
    assert list(result["metrics"]) == metric_names(registry.names)
    assert len(result["metrics"]) == 26


def test_evaluation_of_three_images_yields_three_reports(client):
    pages = {f"p{i}": png_from_values(GT_VALUES) for i in range(3)}
    gt = _upload(client, **pages)
    hyp = _upload(client, **pages)
    job = wait_for_job(client, submit_evaluation(client, gt, hyp).json()["job"])
    assert job["state"] == "done"
    assert [r["file"] for r in job["results"]] == ["p0.png", "p1.png", "p2.png"]
    for result in job["results"]:
        assert result["metrics"]["exact_match"] == 1.0


def test_pending_or_running_job_has_no_results_field(client):
    gt = _upload(client, page=png_from_values(GT_VALUES))
    hyp = _upload(client, page=png_from_values(PRED_VALUES))
    job_id = submit_evaluation(client, gt, hyp).json()["job"]
    body = client.get(f"/jobs/{job_id}").json()
    if body["state"] in ("pending", "running"):
        assert "results" not in body
    wait_for_job(client, job_id)


def test_dimension_mismatch_fails_job_with_diagnostic(client):
    gt = _upload(client, page=png_from_values(GT_VALUES))
    hyp = _upload(client, page=png_from_values([[0x01]]))
    job = wait_for_job(client, submit_evaluation(client, gt, hyp).json()["job"])
    assert job["state"] == "failed"
    assert job["errors"][0]["file"] == "page.png"
    assert "2x2" in job["errors"][0]["error"]


def test_failed_job_reports_every_broken_image(client):
    gt = _upload(client, a=png_from_values(GT_VALUES), b=png_from_values(GT_VALUES))
    hyp = _upload(client, a=png_from_values([[0x01]]), b=png_from_values(PRED_VALUES))
    job = wait_for_job(client, submit_evaluation(client, gt, hyp).json()["job"])
    assert job["state"] == "failed"
    assert [e["file"] for e in job["errors"]] == ["a.png"]


def test_unknown_job_is_404(client):
    assert client.get("/jobs/jdoesnotexist").status_code == 404


def test_job_reads_are_idempotent(client):
    gt = _upload(client, page=png_from_values(GT_VALUES))
    hyp = _upload(client, page=png_from_values(PRED_VALUES))
    job_id = submit_evaluation(client, gt, hyp).json()["job"]
    wait_for_job(client, job_id)
    first = client.get(f"/jobs/{job_id}")
    second = client.get(f"/jobs/{job_id}")
    assert first.content == second.content


# --- persistence ----------------------------------------------------------------


def test_collections_and_jobs_survive_restart(tmp_path):
    data_dir = tmp_path / "data"
    with TestClient(create_app(data_dir)) as client:
        gt = _upload(client, page=png_from_values(GT_VALUES))
        hyp = _upload(client, page=png_from_values(PRED_VALUES))
        job_id = submit_evaluation(client, gt, hyp).json()["job"]
        done = wait_for_job(client, job_id)

    with TestClient(create_app(data_dir)) as restarted:
        assert restarted.get(f"/jobs/{job_id}").json() == done
        response = submit_evaluation(restarted, gt, hyp)
        assert response.status_code == 202
        assert wait_for_job(restarted, response.json()["job"])["state"] == "done"


def test_unfinished_job_is_resumed_on_startup(tmp_path):
    data_dir = tmp_path / "data"
    with TestClient(create_app(data_dir)) as client:
        gt = _upload(client, page=png_from_values(GT_VALUES))
        hyp = _upload(client, page=png_from_values(PRED_VALUES))
    # Simulate a crash between accepting and executing the job: write a
    # pending job record directly, then boot the service.
    from layouteval.service import JobStore

    job = JobStore(data_dir / "jobs").create(gt, hyp)
    with TestClient(create_app(data_dir)) as restarted:
        assert wait_for_job(restarted, job["id"])["state"] == "done"
