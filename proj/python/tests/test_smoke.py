# Copyright 2026 The Imagine Authors
# SPDX-License-Identifier: Apache-2.0

import json

import numpy as np
import pytest

import imagine


def test_counting_oracle_episode():
    inst = imagine.gen_counting(seed=3, n=4)
    assert imagine.task_kind(inst) == "counting"
    labels = inst.labels
    assert labels.shape == (256, 256)
    assert set(np.unique(labels)) - {0} == {1, 2, 3, 4}
    out = imagine.run_episode(inst)
    assert out["status"] == "answered"
    assert out["correct"]
    assert imagine.parse_count(out["answer"]) == 4
    assert out["replay_ok"]
    assert out["max_images_per_request"] <= 2
    assert out["final_image"].shape == (256, 256, 4)


def test_callable_policy_sees_public_observation():
    inst = imagine.gen_counting(seed=1, n=2)
    seen = []

    def policy(obs):
        seen.append(obs)
        assert obs.image[:8] == b"\x89PNG\r\n\x1a\n"
        return "ANSWER: 2"

    out = imagine.run_episode(inst, policy=policy)
    assert out["correct"]
    assert len(seen) == 1
    assert seen[0].mode == "cursor"
    assert "Answer" in seen[0].legal
    assert seen[0].system_prompt


def test_scripted_cursor_only_keeps_base():
    inst = imagine.gen_counting(seed=2, n=3)
    out = imagine.run_episode(inst, policy=["MOVE a", "MOVE d", "FOCUS", "ANSWER: 3"], mode="cursor-only")
    assert out["status"] == "answered"
    bases = {r["base_digest"] for r in out["records"]}
    assert len(bases) == 1


def test_parse_action_and_grading():
    assert imagine.parse_action("I think we should FOCUS now", ["RequestFocus", "MoveCursor", "Answer"]) == "FOCUS"
    assert imagine.parse_action("nothing here", ["RequestFocus"]) is None
    assert imagine.grade_qa("It is a circle.", "circle")
    assert not imagine.grade_qa("a square", "circle")
    m = imagine.score_counting([2, None, 5], [2, 3, 4])
    assert m["success_rate"] == pytest.approx(1 / 3)


def test_inpaint_closed_form():
    img = np.zeros((3, 3, 4), np.uint8)
    img[..., 3] = 255
    img[0, 1, :3] = 10
    img[1, 0, :3] = 20
    img[1, 2, :3] = 30
    img[2, 1, :3] = 40
    hole = np.zeros((3, 3), bool)
    hole[1, 1] = True
    out = imagine.inpaint(img, hole)
    assert abs(int(out[1, 1, 0]) - 25) <= 1
    keep = ~hole
    assert (out[keep] == img[keep]).all()


def test_png_and_bundle_round_trip(tmp_path):
    inst = imagine.gen_placement(seed=4)
    imagine.write_png(tmp_path / "base.png", inst.base)
    assert (imagine.read_png(tmp_path / "base.png") == inst.base).all()
    imagine.save_instance(tmp_path / "bundle", inst)
    back = imagine.load_instance(tmp_path / "bundle")
    assert isinstance(back, imagine.PlacementInstance)
    assert back.prompt == inst.prompt
    assert (back.platform == inst.platform).all()


def test_errors_are_typed():
    with pytest.raises(imagine.ImagineError, match="rows"):
        imagine.gen_jigsaw(0, 2, 2, 1)


def test_ray_chain_and_two_clusters():
    scene = imagine.GaussianScene(
        centers=np.array([[0, 0, -2], [0, 0, -3], [0, 0, -4]], float),
        scales=np.full((3, 3), 0.2),
        opacity=np.array([0.5, 0.5, 0.5]),
    )
    hits = imagine.trace_ray(scene, (0, 0, 0), (0, 0, -1))
    assert [h[0] for h in hits] == [0, 1, 2]
    t = 1.0
    for _, contribution, transmittance in hits:
        assert transmittance == pytest.approx(t, abs=1e-12)
        t *= 1 - contribution / transmittance

    scene, labels, centers = imagine.make_two_clusters(0)
    cam = imagine.Camera(position=(0, -2.0, 0.6), look_at=(0, 0, 0), up=(0, 0, 1), vertical_fov=0.9,
                         width=128, height=128)
    u, v = cam.project(centers[0])
    obj, rest = imagine.segment_with_labels(scene, labels, (int(u), int(v)), cam)
    assert sorted(obj + rest) == list(range(len(scene)))
    assert all(labels[i] == 1 for i in obj)


def test_workflows(tmp_path):
    manifest = imagine.generate({
        "task": "counting",
        "output": str(tmp_path / "ds"),
        "generator": {"counts": [2, 3], "per_count": 2, "width": 128, "height": 128},
    })
    assert manifest["count"] == 4
    results = imagine.run({"task": "counting", "dataset": str(tmp_path / "ds"), "output": str(tmp_path / "run")})
    assert results["metrics"]["success_rate"] == 1.0
    imagine.report([tmp_path / "run"], tmp_path / "rep")
    assert (tmp_path / "rep" / "comparison.csv").exists()
    trace = sorted((tmp_path / "run" / "traces").iterdir())[0]
    summary = imagine.replay(trace, tmp_path / "frames")
    assert summary["ok"]
    assert json.loads((tmp_path / "run" / "results.json").read_text())["schema"] == "imagine-results"
