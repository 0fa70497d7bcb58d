import io
import json
import tarfile
import threading

import pytest
from fastapi.testclient import TestClient

from crowdseg.masks import deserialize_mask
from crowdseg.server import ApiConfig, create_app
from helpers import make_lseg, make_png

W, H = 24, 18


@pytest.fixture
def rig(tmp_path):
    config = ApiConfig(data_root=tmp_path / "data", fsync=False)
    app = create_app(config)
    with TestClient(app, raise_server_exceptions=False) as client:
        root_token = app.state.bootstrap[1]

        def auth(token):
            return {"Authorization": f"Bearer {token}"}

        def register(name, role):
            resp = client.post("/api/v1/annotators",
                               json={"display_name": name, "role": role},
                               headers=auth(root_token))
            assert resp.status_code == 201, resp.text
            return resp.json()["annotator"]["annotator_id"], resp.json()["token"]

        student_id, student_token = register("Student A", "annotator")
        senior_id, senior_token = register("Dr. Senior", "senior")
        yield {
            "app": app,
            "client": client,
            "store": app.state.store,
            "auth": auth,
            "tokens": {"root": root_token, "student": student_token,
                       "senior": senior_token},
            "ids": {"root": app.state.bootstrap[0].annotator_id,
                    "student": student_id, "senior": senior_id},
        }


def enroll_png(rig, seed=1, width=W, height=H):
    png = make_png(width, height, seed=seed)
    resp = rig["client"].post(
        "/api/v1/images", content=png,
        headers={**rig["auth"](rig["tokens"]["root"]), "X-Source-Name": f"s{seed}.png"})
    assert resp.status_code == 201, resp.text
    return resp.json(), png


def assign(rig, image_id, annotator_key="student"):
    resp = rig["client"].post(
        "/api/v1/assignments",
        json={"image_id": image_id, "annotator_id": rig["ids"][annotator_key]},
        headers=rig["auth"](rig["tokens"]["root"]))
    assert resp.status_code == 201, resp.text
    return resp.json()


def submit(rig, image_id, lseg, token_key="student"):
    return rig["client"].post(
        f"/api/v1/images/{image_id}/segmentations", content=lseg,
        headers=rig["auth"](rig["tokens"][token_key]))


# (method, path, needs_json_body) for every authenticated endpoint
ENDPOINT_TABLE = [
    ("POST", "/api/v1/images", None),
    ("GET", "/api/v1/images/{img}", None),
    ("GET", "/api/v1/images/{img}/enhanced", None),
    ("GET", "/api/v1/images/{img}/presegmentation", None),
    ("GET", "/api/v1/images/{img}/quality", None),
    ("GET", "/api/v1/images/{img}/segmentations", None),
    ("GET", "/api/v1/segmentations/{img}/1", None),
    ("POST", "/api/v1/images/{img}/segmentations", None),
    ("POST", "/api/v1/images/{img}/restore/1", None),
    ("POST", "/api/v1/tasks/t-x/skip", {"reason": "r"}),
    ("POST", "/api/v1/tasks/t-x/review", {"verdict": "approved"}),
    ("GET", "/api/v1/tasks?mine=true", None),
    ("POST", "/api/v1/assignments", {"image_id": "x", "annotator_id": "y"}),
    ("POST", "/api/v1/annotators", {"display_name": "x", "role": "annotator"}),
    ("GET", "/api/v1/annotators", None),
    ("GET", "/api/v1/next-batch?strategy=random&k=1&seed=1", None),
    ("GET", "/api/v1/export?selector=all", None),
]


def assert_error_shape(resp):
    body = resp.json()
    assert set(body) == {"status", "code", "message"}
    assert body["status"] == resp.status_code


class TestAuth:
    def test_health_needs_no_token(self, rig):
        resp = rig["client"].get("/api/v1/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    @pytest.mark.parametrize("method,path,body", ENDPOINT_TABLE)
    def test_every_endpoint_rejects_missing_token(self, rig, method, path, body):
        path = path.replace("{img}", "0" * 64)
        resp = rig["client"].request(method, path, json=body)
        assert resp.status_code == 401
        assert resp.json()["code"] == "unauthenticated"
        assert_error_shape(resp)

    def test_unknown_token(self, rig):
        resp = rig["client"].get("/api/v1/tasks?mine=true",
                                 headers=rig["auth"]("f" * 64))
        assert resp.status_code == 401

    def test_deactivated_annotator_rejected(self, rig):
        wf = rig["app"].state.workflow
        root = rig["store"].annotator(rig["ids"]["root"])
        wf.set_active(rig["ids"]["student"], False, root)
        resp = rig["client"].get("/api/v1/tasks?mine=true",
                                 headers=rig["auth"](rig["tokens"]["student"]))
        assert resp.status_code == 401


ROLE_FLOORS = [
    # endpoint requiring researcher, called as annotator and senior
    ("POST", "/api/v1/images", None, ["student", "senior"]),
    ("POST", "/api/v1/assignments", {"image_id": "x", "annotator_id": "y"},
     ["student", "senior"]),
    ("POST", "/api/v1/annotators", {"display_name": "x", "role": "annotator"},
     ["student", "senior"]),
    ("GET", "/api/v1/annotators", None, ["student", "senior"]),
    ("GET", "/api/v1/next-batch?strategy=random&k=1&seed=1", None,
     ["student", "senior"]),
    ("GET", "/api/v1/export?selector=all", None, ["student", "senior"]),
    # senior floor, called as annotator
    ("POST", "/api/v1/images/{img}/restore/1", None, ["student"]),
    ("POST", "/api/v1/tasks/t-x/review", {"verdict": "approved"}, ["student"]),
]


class TestRoleMatrix:
    @pytest.mark.parametrize("method,path,body,callers", ROLE_FLOORS)
    def test_forbidden_pairs_403_without_effects(self, rig, method, path, body, callers):
        record, _ = enroll_png(rig, seed=50)
        path = path.replace("{img}", record["image_id"])
        store = rig["store"]
        for caller in callers:
            seq_before = store.journal.last_seq
            state_before = store.dump_state()
            resp = rig["client"].request(
                method, path, json=body, headers=rig["auth"](rig["tokens"][caller]))
            assert resp.status_code == 403, f"{method} {path} as {caller}: {resp.text}"
            assert resp.json()["code"] == "forbidden_role"
            assert_error_shape(resp)
            assert store.journal.last_seq == seq_before
            assert store.dump_state() == state_before


class TestEnroll:
    def test_enroll_reports_dimensions(self, rig):
        record, _ = enroll_png(rig, seed=1)
        assert record["width"] == W
        assert record["height"] == H
        assert record["status"] == "pending"
        assert record["created"] is True
        assert record["source_name"] == "s1.png"

    def test_duplicate_enrollment_idempotent(self, rig):
        first, png = enroll_png(rig, seed=2)
        resp = rig["client"].post("/api/v1/images", content=png,
                                  headers=rig["auth"](rig["tokens"]["root"]))
        assert resp.status_code == 201
        again = resp.json()
        assert again["image_id"] == first["image_id"]
        assert again["created"] is False
        history = rig["client"].get(
            f"/api/v1/images/{first['image_id']}/segmentations",
            headers=rig["auth"](rig["tokens"]["root"])).json()
        assert history["total"] == 0

    def test_undecodable_png(self, rig):
        resp = rig["client"].post("/api/v1/images", content=b"not a png",
                                  headers=rig["auth"](rig["tokens"]["root"]))
        assert resp.status_code == 400
        assert resp.json()["code"] == "malformed_payload"

    def test_payload_too_large(self, tmp_path):
        config = ApiConfig(data_root=tmp_path / "small", fsync=False,
                           max_upload_bytes=100)
        app = create_app(config)
        with TestClient(app, raise_server_exceptions=False) as client:
            token = app.state.bootstrap[1]
            resp = client.post("/api/v1/images", content=b"x" * 200,
                               headers={"Authorization": f"Bearer {token}"})
            assert resp.status_code == 413
            assert resp.json()["code"] == "payload_too_large"


class TestImageEndpoints:
    def test_image_bytes_round_trip(self, rig):
        record, png = enroll_png(rig, seed=3)
        resp = rig["client"].get(f"/api/v1/images/{record['image_id']}",
                                 headers=rig["auth"](rig["tokens"]["student"]))
        assert resp.status_code == 200
        assert resp.content == png

    def test_unknown_image_404(self, rig):
        resp = rig["client"].get(f"/api/v1/images/{'0' * 64}",
                                 headers=rig["auth"](rig["tokens"]["student"]))
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_resource"

    def test_enhanced_is_valid_png_and_cached(self, rig):
        record, _ = enroll_png(rig, seed=4)
        url = f"/api/v1/images/{record['image_id']}/enhanced"
        r1 = rig["client"].get(url, headers=rig["auth"](rig["tokens"]["student"]))
        r2 = rig["client"].get(url, headers=rig["auth"](rig["tokens"]["student"]))
        assert r1.status_code == 200
        assert r1.content[:8] == b"\x89PNG\r\n\x1a\n"
        assert r1.content == r2.content

    def test_presegmentation_parses_and_names_provider(self, rig):
        record, _ = enroll_png(rig, seed=5)
        url = f"/api/v1/images/{record['image_id']}/presegmentation"
        resp = rig["client"].get(url, headers=rig["auth"](rig["tokens"]["student"]))
        assert resp.status_code == 200
        assert resp.headers["x-provider"] == "frangi-v1"
        mask = deserialize_mask(resp.content)
        assert (mask.width, mask.height) == (W, H)
        assert mask.layer_names() == ["vessel"]
        again = rig["client"].get(url, headers=rig["auth"](rig["tokens"]["student"]))
        assert again.content == resp.content

    def test_quality_schema(self, rig):
        record, _ = enroll_png(rig, seed=6)
        resp = rig["client"].get(f"/api/v1/images/{record['image_id']}/quality",
                                 headers=rig["auth"](rig["tokens"]["student"]))
        body = resp.json()
        assert set(body) == {"grade", "sharpness", "contrast", "exposure"}
        assert 1.0 <= body["grade"] <= 10.0


class TestSubmitFlow:
    def test_submit_appends_version(self, rig):
        record, _ = enroll_png(rig, seed=7)
        assign(rig, record["image_id"])
        lseg = make_lseg(W, H, seed=7)
        resp = submit(rig, record["image_id"], lseg)
        assert resp.status_code == 201, resp.text
        entry = resp.json()
        assert entry["version_no"] == 1
        assert entry["kind"] == "manual"
        got = rig["client"].get(
            f"/api/v1/segmentations/{record['image_id']}/1",
            headers=rig["auth"](rig["tokens"]["root"]))
        assert got.content == lseg

    def test_submit_without_task_409(self, rig):
        record, _ = enroll_png(rig, seed=8)
        resp = submit(rig, record["image_id"], make_lseg(W, H))
        assert resp.status_code == 409
        assert resp.json()["code"] == "illegal_transition"

    def test_submit_malformed_mask(self, rig):
        record, _ = enroll_png(rig, seed=9)
        assign(rig, record["image_id"])
        resp = submit(rig, record["image_id"], b"garbage")
        assert resp.status_code == 400
        assert resp.json()["code"] == "malformed_payload"

    def test_submit_wrong_dims(self, rig):
        record, _ = enroll_png(rig, seed=10)
        assign(rig, record["image_id"])
        resp = submit(rig, record["image_id"], make_lseg(4, 4))
        assert resp.status_code == 422
        assert resp.json()["code"] == "dimension_mismatch"

    def test_history_pagination(self, rig):
        record, _ = enroll_png(rig, seed=11)
        assign(rig, record["image_id"])
        submit(rig, record["image_id"], make_lseg(W, H, seed=1))
        headers = rig["auth"](rig["tokens"]["root"])
        rig["client"].post(f"/api/v1/images/{record['image_id']}/restore/1",
                           headers=headers)
        resp = rig["client"].get(
            f"/api/v1/images/{record['image_id']}/segmentations?offset=1&limit=1",
            headers=headers)
        body = resp.json()
        assert body["total"] == 2
        assert len(body["versions"]) == 1
        assert body["versions"][0]["version_no"] == 2
        assert body["versions"][0]["kind"] == "restore"


class TestReviewAndSkip:
    def prepare_submitted(self, rig, seed):
        record, _ = enroll_png(rig, seed=seed)
        task = assign(rig, record["image_id"])
        submit(rig, record["image_id"], make_lseg(W, H, seed=seed))
        return record, task

    def test_approve_via_json(self, rig):
        record, task = self.prepare_submitted(rig, 12)
        resp = rig["client"].post(
            f"/api/v1/tasks/{task['task_id']}/review",
            json={"verdict": "approved"},
            headers=rig["auth"](rig["tokens"]["senior"]))
        assert resp.status_code == 201, resp.text
        assert resp.json()["review"] == "approved"

    def test_correct_via_multipart(self, rig):
        record, task = self.prepare_submitted(rig, 13)
        corrected = make_lseg(W, H, seed=99)
        resp = rig["client"].post(
            f"/api/v1/tasks/{task['task_id']}/review",
            data={"verdict": "corrected"},
            files={"mask": ("fix.lseg", corrected, "application/octet-stream")},
            headers=rig["auth"](rig["tokens"]["senior"]))
        assert resp.status_code == 201, resp.text
        history = rig["client"].get(
            f"/api/v1/images/{record['image_id']}/segmentations",
            headers=rig["auth"](rig["tokens"]["root"])).json()
        assert history["total"] == 2
        assert history["versions"][0]["review"] == "corrected"
        assert history["versions"][1]["kind"] == "correction"
        blob = rig["client"].get(
            f"/api/v1/segmentations/{record['image_id']}/2",
            headers=rig["auth"](rig["tokens"]["root"]))
        assert blob.content == corrected

    def test_corrected_requires_mask(self, rig):
        _, task = self.prepare_submitted(rig, 14)
        resp = rig["client"].post(
            f"/api/v1/tasks/{task['task_id']}/review",
            json={"verdict": "corrected"},
            headers=rig["auth"](rig["tokens"]["senior"]))
        assert resp.status_code == 400

    def test_double_review_conflict(self, rig):
        _, task = self.prepare_submitted(rig, 15)
        headers = rig["auth"](rig["tokens"]["senior"])
        url = f"/api/v1/tasks/{task['task_id']}/review"
        assert rig["client"].post(url, json={"verdict": "approved"},
                                  headers=headers).status_code == 201
        resp = rig["client"].post(url, json={"verdict": "approved"}, headers=headers)
        assert resp.status_code == 409
        assert resp.json()["code"] == "illegal_transition"

    def test_skip_records_grade(self, rig):
        record, _ = enroll_png(rig, seed=16)
        task = assign(rig, record["image_id"])
        resp = rig["client"].post(
            f"/api/v1/tasks/{task['task_id']}/skip",
            json={"reason": "blurred", "quality_grade": 2.3},
            headers=rig["auth"](rig["tokens"]["student"]))
        assert resp.status_code == 200, resp.text
        body = resp.json()
        assert body["state"] == "skipped"
        assert body["quality_grade_at_skip"] == 2.3
        assert body["skip_reason"] == "blurred"

    def test_skip_needs_reason(self, rig):
        record, _ = enroll_png(rig, seed=17)
        task = assign(rig, record["image_id"])
        resp = rig["client"].post(
            f"/api/v1/tasks/{task['task_id']}/skip", json={},
            headers=rig["auth"](rig["tokens"]["student"]))
        assert resp.status_code == 400


class TestTaskListing:
    def test_mine_true_lists_open_tasks(self, rig):
        record, _ = enroll_png(rig, seed=18)
        task = assign(rig, record["image_id"])
        resp = rig["client"].get("/api/v1/tasks?mine=true",
                                 headers=rig["auth"](rig["tokens"]["student"]))
        tasks = resp.json()["tasks"]
        assert [t["task_id"] for t in tasks] == [task["task_id"]]

    def test_other_query_rejected(self, rig):
        resp = rig["client"].get("/api/v1/tasks",
                                 headers=rig["auth"](rig["tokens"]["student"]))
        assert resp.status_code == 400

    def test_duplicate_assignment_conflict(self, rig):
        record, _ = enroll_png(rig, seed=19)
        assign(rig, record["image_id"])
        resp = rig["client"].post(
            "/api/v1/assignments",
            json={"image_id": record["image_id"],
                  "annotator_id": rig["ids"]["student"]},
            headers=rig["auth"](rig["tokens"]["root"]))
        assert resp.status_code == 409
        assert resp.json()["code"] == "duplicate_open_task"


class TestNextBatch:
    def test_random_deterministic(self, rig):
        for seed in range(3):
            enroll_png(rig, seed=100 + seed)
        url = "/api/v1/next-batch?strategy=random&k=2&seed=7"
        headers = rig["auth"](rig["tokens"]["root"])
        r1 = rig["client"].get(url, headers=headers)
        r2 = rig["client"].get(url, headers=headers)
        assert r1.status_code == 200
        assert r1.json() == r2.json()
        assert len(r1.json()["image_ids"]) == 2

    def test_entropy_uses_presegmentation(self, rig):
        ids = [enroll_png(rig, seed=200 + s)[0]["image_id"] for s in range(2)]
        resp = rig["client"].get("/api/v1/next-batch?strategy=entropy&k=5",
                                 headers=rig["auth"](rig["tokens"]["root"]))
        assert resp.status_code == 200
        assert set(resp.json()["image_ids"]) == set(ids)

    def test_unknown_strategy(self, rig):
        resp = rig["client"].get("/api/v1/next-batch?strategy=wat&k=1",
                                 headers=rig["auth"](rig["tokens"]["root"]))
        assert resp.status_code == 400

    def test_annotated_images_leave_pool(self, rig):
        record, _ = enroll_png(rig, seed=300)
        assign(rig, record["image_id"])
        submit(rig, record["image_id"], make_lseg(W, H))
        resp = rig["client"].get("/api/v1/next-batch?strategy=random&k=10&seed=1",
                                 headers=rig["auth"](rig["tokens"]["root"]))
        assert record["image_id"] not in resp.json()["image_ids"]


class TestExport:
    def test_layout_after_one_submission(self, rig):
        record, png = enroll_png(rig, seed=20)
        assign(rig, record["image_id"])
        lseg = make_lseg(W, H, seed=20)
        submit(rig, record["image_id"], lseg)
        resp = rig["client"].get("/api/v1/export?selector=all",
                                 headers=rig["auth"](rig["tokens"]["root"]))
        assert resp.status_code == 200
        tar = tarfile.open(fileobj=io.BytesIO(resp.content))
        names = tar.getnames()
        img_id = record["image_id"]
        assert f"images/{img_id}.png" in names
        seg_members = [n for n in names if n.startswith(f"segmentations/{img_id}/")]
        assert len(seg_members) == 1
        assert seg_members[0].endswith(".lseg")
        assert tar.extractfile(seg_members[0]).read() == lseg
        assert f"renders/{img_id}/vessel.png" in names
        manifest = json.loads(tar.extractfile("manifest.json").read())
        entry = [i for i in manifest["images"] if i["image_id"] == img_id][0]
        assert len(entry["versions"]) == 1
        assert entry["versions"][0]["annotator_id"] == rig["ids"]["student"]

    def test_reviewed_only_excludes_unreviewed(self, rig):
        reviewed, _ = enroll_png(rig, seed=21)
        unreviewed, _ = enroll_png(rig, seed=22)
        for rec in (reviewed, unreviewed):
            assign(rig, rec["image_id"])
            submit(rig, rec["image_id"], make_lseg(W, H, seed=1))
        task = [t for t in rig["store"].list_tasks()
                if t.image_id == reviewed["image_id"]][0]
        rig["client"].post(
            f"/api/v1/tasks/{task.task_id}/review", json={"verdict": "approved"},
            headers=rig["auth"](rig["tokens"]["senior"]))
        resp = rig["client"].get("/api/v1/export?selector=reviewed-only",
                                 headers=rig["auth"](rig["tokens"]["root"]))
        tar = tarfile.open(fileobj=io.BytesIO(resp.content))
        names = tar.getnames()
        assert f"images/{reviewed['image_id']}.png" in names
        assert f"images/{unreviewed['image_id']}.png" not in names

    def test_manifest_counts_match_history(self, rig):
        record, _ = enroll_png(rig, seed=23)
        assign(rig, record["image_id"])
        submit(rig, record["image_id"], make_lseg(W, H, seed=2))
        headers = rig["auth"](rig["tokens"]["root"])
        rig["client"].post(f"/api/v1/images/{record['image_id']}/restore/1",
                           headers=headers)
        resp = rig["client"].get("/api/v1/export?selector=all", headers=headers)
        tar = tarfile.open(fileobj=io.BytesIO(resp.content))
        manifest = json.loads(tar.extractfile("manifest.json").read())
        total_versions = sum(len(i["versions"]) for i in manifest["images"])
        store = rig["store"]
        expected = sum(store.history_len(i.image_id) for i in store.list_images())
        assert total_versions == expected


class TestRestartAndConcurrency:
    def test_restart_replays_state(self, tmp_path):
        config = ApiConfig(data_root=tmp_path / "data", fsync=False)
        app = create_app(config)
        with TestClient(app, raise_server_exceptions=False) as client:
            token = app.state.bootstrap[1]
            headers = {"Authorization": f"Bearer {token}"}
            png = make_png(W, H, seed=1)
            image_id = client.post("/api/v1/images", content=png,
                                   headers=headers).json()["image_id"]
            state = app.state.store.dump_state()
        app2 = create_app(ApiConfig(data_root=tmp_path / "data", fsync=False))
        with TestClient(app2, raise_server_exceptions=False) as client2:
            assert app2.state.bootstrap is None  # annotators replayed, no re-bootstrap
            assert app2.state.store.dump_state() == state
            resp = client2.get(f"/api/v1/images/{image_id}", headers=headers)
            assert resp.content == png

    def test_concurrent_submissions_different_images(self, rig):
        records = [enroll_png(rig, seed=400 + i)[0] for i in range(2)]
        keys = ["student", "senior"]
        for record, key in zip(records, keys):
            assign(rig, record["image_id"], annotator_key=key)
        results = {}

        def worker(record, key):
            resp = submit(rig, record["image_id"], make_lseg(W, H, seed=5),
                          token_key=key)
            results[key] = resp.status_code

        threads = [threading.Thread(target=worker, args=(r, k))
                   for r, k in zip(records, keys)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == {"student": 201, "senior": 201}
