"""Smoke tests for the compiled module: one probe per exported layer."""

import json

import pytest

import mrrlvr


def test_version_and_surface():
    assert mrrlvr.__version__ == "0.1.0"
    for name in mrrlvr.__all__:
        assert hasattr(mrrlvr, name)


def test_math_layer():
    assert mrrlvr.extract_boxed(r"first \boxed{1} then \boxed{42}") == "42"
    assert mrrlvr.extract_boxed("no marker here") is None

    verdict = mrrlvr.math_equivalent(r"\frac{1}{2}", "0.5")
    assert verdict["equivalent"] is True
    assert verdict["method"] == "numeric"
    assert verdict["similarity"] == 1.0
    assert mrrlvr.math_equivalent("7", "8")["equivalent"] is False

    norm = mrrlvr.normalize(r"  \dfrac{3}{4} ")
    assert norm["canonical"] == r"\frac{3}{4}"
    assert norm["numeric_value"] == pytest.approx(0.75)

    assert mrrlvr.text_similarity("abc", "abc") == 1.0
    assert 0.0 <= mrrlvr.text_similarity("abc", "abd") < 1.0


def test_reward_layer():
    inst = mrrlvr.ReorderInstance(
        instance_id="p#reorder",
        problem_id="p",
        shuffled_steps=[f"Step {i}: s{i}" for i in range(4)],
        true_order=[2, 0, 3, 1],
    )
    assert mrrlvr.score_reorder(inst, r"\boxed{2, 0, 3, 1}")["value"] == 1.0
    bad = mrrlvr.score_reorder(inst, r"\boxed{0, 0, 1, 2}")
    assert bad["value"] == 0.0
    assert "duplicate" in bad["note"]
    # bare payloads are accepted by default, matching the scoring CLI
    assert mrrlvr.score_reorder(inst, "2, 0, 3, 1")["value"] == 1.0

    masked = mrrlvr.MaskedInstance(
        instance_id="p#mask",
        problem_id="p",
        masked_text="x equals <formula_masked> and y equals <formula_masked>.",
        ground_truths=["$1 + 1$", "$2 + 2$"],
        mask_count=2,
    )
    right = mrrlvr.score_mask(masked, mrrlvr.format_mask_response(["$1 + 1$", "$2 + 2$"]))
    assert right["value"] == 1.0
    mixed = mrrlvr.score_mask(masked, r"\boxed{$1 + 1$; $9 - 9$}")
    assert 0.0 < mixed["value"] < 1.0

    assert mrrlvr.score_final("42", r"the answer is \boxed{42}")["value"] == 1.0
    assert mrrlvr.score_final("42", r"the answer is \boxed{41}")["value"] == 0.0


def test_eval_layer():
    assert mrrlvr.pass_at_k(8, 8, 1) == 1.0
    assert mrrlvr.pass_at_k(8, 0, 5) == 0.0
    assert mrrlvr.pass_at_k(8, 3, 1) == pytest.approx(3 / 8)
    means = mrrlvr.evaluate_set([("p1", 8, 3), ("p2", 8, 8)], [1, 8])
    assert means[1] == pytest.approx((3 / 8 + 1.0) / 2)
    assert means[8] == 1.0
    with pytest.raises(ValueError):
        mrrlvr.evaluate_set([("p1", 4, 2)], [8])  # k beyond the sample count


def test_file_and_training_layer(tmp_path):
    rows = [
        {
            "instance_id": "a#mask",
            "problem_id": "a",
            "task": "mask_fill",
            "masked_text": "start <formula_masked> end",
            "ground_truths": ["$5 + 5$"],
            "mask_count": 1,
        },
        {
            "instance_id": "a#reorder",
            "problem_id": "a",
            "task": "reorder",
            "shuffled_steps": ["Step 0: b", "Step 1: a", "Step 2: c"],
            "true_order": [1, 0, 2],
            "n": 3,
        },
    ]
    data = tmp_path / "stage1.jsonl"
    data.write_text("".join(json.dumps(r) + "\n" for r in rows))
    loaded = mrrlvr.load_instances(str(data))
    assert isinstance(loaded[0], mrrlvr.MaskedInstance)
    assert isinstance(loaded[1], mrrlvr.ReorderInstance)
    assert loaded[1].true_order == [1, 0, 2]

    out = mrrlvr.train_stage(
        1,
        str(data),
        str(tmp_path / "run"),
        seed=3,
        epochs=1,
        batch_queries=2,
        group_size=4,
        m=2,
        n_max=3,
        max_steps=3,
    )
    assert out["finished"] is True
    assert out["steps_run"] == out["step"] > 0
    metrics = [
        json.loads(line)
        for line in open(out["metrics_path"])
        if line.strip()
    ]
    assert len(metrics) == out["step"]
    assert {row["stage"] for row in metrics} == {1}

    with pytest.raises(ValueError):
        mrrlvr.train_stage(2, str(data), str(tmp_path / "run2"), seed=3)
