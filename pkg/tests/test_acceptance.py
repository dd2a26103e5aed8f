"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import time

import numpy as np
import pytest
from scipy.stats import mannwhitneyu

from mpfscope import cli, microscope, sentinel
from mpfscope.consistency import ChangeStats, consistency_score, score_stack
from mpfscope.evaluate import metrics
from mpfscope.frames import load_segment
from mpfscope.microscope import classify, cross_entropy_loss, loss_gradient, train
from mpfscope.residual import residual_normalized
from mpfscope.synthgen import (
    DecoderModel,
    LatentTrajectory,
    PhysicsModel,
    SynthConfig,
    decode_trajectory,
    generate_physics_sequence,
    generate_sequence,
    residual_rank,
)

from conftest import sequence_from
from test_synthgen import linearization_ratio

SEQUENCES_PER_REGIME = 200
SHAPE = (64, 64, 3)
LATENT_DIM = 16
LENGTH = 8


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def default_corpus():
    """The 200-per-regime default corpus, kept in memory for reuse."""
    out = {}
    for regime in ("decoder", "physics"):
        cfg = SynthConfig(regime=regime, count=SEQUENCES_PER_REGIME, seed=42)
        out[regime] = [generate_sequence(cfg, i)
                       for i in range(SEQUENCES_PER_REGIME)]
    return out


def test_criterion_1_mpf_separation(default_corpus):
    t0 = time.time()
    scores = {}
    for regime, sequences in default_corpus.items():
        qty, spa = [], []
        for seq in sequences:
            s = score_stack(residual_normalized(seq))
            qty.append(s.c_qty)
            spa.append(s.c_spa)
        scores[regime] = (np.array(qty), np.array(spa))
    elapsed = time.time() - t0

    dq, ds = scores["decoder"]
    pq, ps = scores["physics"]
    qty_gap = dq.mean() - pq.mean()
    spa_gap = ds.mean() - ps.mean()
    p_qty = mannwhitneyu(dq, pq, alternative="greater").pvalue
    p_spa = mannwhitneyu(ds, ps, alternative="greater").pvalue

    passed = (qty_gap > 0.1 and spa_gap > 0 and p_qty < 0.01 and p_spa < 0.01
              and elapsed < 60.0)
    report(
        "criterion 1 MPF separation",
        passed,
        f"C_qty gap {qty_gap:.4f} (>0.1), C_spa gap {spa_gap:.4f} (>0), "
        f"MW p_qty {p_qty:.2e}, p_spa {p_spa:.2e} (<0.01), "
        f"scoring took {elapsed:.1f}s (<60s)",
    )


def test_criterion_2_rank_invariant():
    trials = 50
    decoder_ok = 0
    physics_ok = 0
    for seed in range(trials):
        model = DecoderModel.create(SHAPE, latent_dim=LATENT_DIM, seed=seed)
        traj = LatentTrajectory.create(latent_dim=LATENT_DIM, drift=0.05,
                                       steps=LENGTH, seed=seed)
        if residual_rank(decode_trajectory(model, traj), rel_cutoff=1e-6) <= LATENT_DIM:
            decoder_ok += 1

        phys = PhysicsModel(jitter_px=1, shot_noise_sigma=0.3, seed=seed)
        seq = generate_physics_sequence(phys, SHAPE, length=LENGTH)
        if residual_rank(seq.frames.astype(np.float64), rel_cutoff=1e-6) == LENGTH - 1:
            physics_ok += 1

    passed = decoder_ok == trials and physics_ok == trials
    report(
        "criterion 2 rank invariant",
        passed,
        f"decoder rank<=16 in {decoder_ok}/{trials}, "
        f"physics rank==7 in {physics_ok}/{trials}",
    )


def test_criterion_3_end_to_end_detection(default_corpus, tmp_path):
    vectors, labels = [], []
    for label, regime in ((1, "decoder"), (0, "physics")):
        for seq in default_corpus[regime]:
            vectors.append(microscope.featurize(residual_normalized(seq)))
            labels.append(label)
    x = np.array(vectors)
    y = np.array(labels)

    order = np.random.default_rng(2024).permutation(len(y))
    split = int(0.8 * len(y))
    train_idx, test_idx = order[:split], order[split:]
    result = train(x[train_idx], y[train_idx], seed=0)
    preds = [1 if classify(result.model, xi).verdict == "AI" else 0
             for xi in x[test_idx]]
    m = metrics(list(y[test_idx]), preds)

    # full pipeline against stage-by-stage composition on disk fixtures
    model_path = tmp_path / "model.json"
    result.model.save(model_path)
    cfg = cli.PipelineConfig(model_path=str(model_path))
    consistent = True
    for regime in ("decoder", "physics"):
        for i, seq in enumerate(default_corpus[regime][:5]):
            raw = tmp_path / f"{regime}_{i}.mpfraw"
            from mpfscope.frames import write_raw

            write_raw(raw, seq.frames)
            trace = cli.run_pipeline(cfg, raw, None)
            stagewise = classify(
                result.model,
                microscope.featurize(residual_normalized(
                    load_segment(raw, length=LENGTH, mode="fixed"))),
            )
            if trace["final"] != stagewise.verdict:
                consistent = False

    passed = m.accuracy >= 0.95 and m.f1 >= 0.95 and consistent
    report(
        "criterion 3 end-to-end detection",
        passed,
        f"held-out accuracy {m.accuracy:.4f} (>=0.95), F1 {m.f1:.4f} (>=0.95), "
        f"pipeline == stage-by-stage: {consistent}",
    )


def test_criterion_4_formula_exactness():
    checks = []

    stack = residual_normalized(
        sequence_from(np.stack([np.full((4, 4, 3), 20, dtype=np.uint8),
                                np.full((4, 4, 3), 25, dtype=np.uint8)])),
        alpha=10.0)
    checks.append(abs(float(stack.maps[0, 0, 0, 0]) - 50.0) <= 1e-9)

    saturated = residual_normalized(
        sequence_from(np.stack([np.full((4, 4, 3), 20, dtype=np.uint8),
                                np.full((4, 4, 3), 80, dtype=np.uint8)])),
        alpha=10.0)
    checks.append(abs(float(saturated.maps[0, 0, 0, 0]) - 255.0) <= 1e-9)

    constant = [ChangeStats(0.3, 0.3, 0.5, 0.5, 0.2, 0.4)] * 5
    score = consistency_score(constant, w1=0.5, w2=0.5)
    checks.append(abs(score.c_qty - 1.0) <= 1e-9)
    checks.append(abs(score.c_spa - 1.0) <= 1e-9)
    checks.append(abs(score.s_cons - 1.0) <= 1e-9)

    checks.append(sentinel.gate(0.5, 0.5).verdict == sentinel.VERDICT_ON_MANIFOLD)
    checks.append(sentinel.gate(0.7, 0.5).verdict == sentinel.VERDICT_OFF_MANIFOLD)

    # TP=8 FN=2 FP=1: F1 = 16/19 = 0.842105...
    m = metrics([1] * 10 + [0], [1] * 8 + [0] * 2 + [1])
    checks.append(abs(m.f1 - 16.0 / 19.0) <= 1e-9)

    report(
        "criterion 4 formula exactness",
        all(checks),
        f"{sum(checks)}/{len(checks)} identities exact to 1e-9 "
        "(Eq-7 scaling, clamp, constant-stat scores, gate tie, F1 16/19)",
    )


def test_criterion_5_gradient_check():
    rng = np.random.default_rng(99)
    x = rng.standard_normal((40, 6))
    y = (rng.random(40) > 0.5).astype(float)
    eps = 1e-6
    worst = 0.0
    for _ in range(10):
        w = rng.standard_normal(6)
        b = float(rng.standard_normal())
        grad_w, grad_b = loss_gradient(w, b, x, y)
        numeric = np.empty(7)
        for j in range(6):
            e = np.zeros(6)
            e[j] = eps
            numeric[j] = (cross_entropy_loss(w + e, b, x, y)
                          - cross_entropy_loss(w - e, b, x, y)) / (2 * eps)
        numeric[6] = (cross_entropy_loss(w, b + eps, x, y)
                      - cross_entropy_loss(w, b - eps, x, y)) / (2 * eps)
        analytic = np.concatenate([grad_w, [grad_b]])
        worst = max(worst, float(np.linalg.norm(analytic - numeric)
                                 / np.linalg.norm(numeric)))
    report(
        "criterion 5 gradient check",
        worst < 1e-5,
        f"max relative error {worst:.2e} over 10 random points (<1e-5)",
    )


def test_criterion_6_taylor_fidelity():
    model = DecoderModel.create((8, 8, 3), latent_dim=6, nonlinearity="tanh",
                                seed=7)
    rng = np.random.default_rng(7)
    big, small = [], []
    for _ in range(5):
        z = rng.standard_normal(6)
        d = rng.standard_normal(6)
        big.append(linearization_ratio(model, z, d, 0.01))
        small.append(linearization_ratio(model, z, d, 0.001))
    r_big, r_small = float(np.mean(big)), float(np.mean(small))
    passed = r_small < r_big and r_big < 10.0 * (10.0 * r_small)
    report(
        "criterion 6 Taylor fidelity",
        passed,
        f"ratio(0.01)={r_big:.2e}, ratio(0.001)={r_small:.2e}, "
        f"decay x{r_big / r_small:.2f} (first-order ~x10)",
    )


def test_criterion_7_determinism(tmp_path, capsys):
    def synth(out):
        rc = cli.main([
            "synth", "--regime", "decoder", "--count", "6", "--seed", "7",
            "--out", str(out),
        ])
        assert rc == 0

    def mixed_corpus(out):
        synth(out)
        rc = cli.main([
            "synth", "--regime", "physics", "--count", "6", "--seed", "7",
            "--out", str(out / "phys"),
        ])
        assert rc == 0
        main = json.loads((out / "corpus.json").read_text())
        phys = json.loads((out / "phys" / "corpus.json").read_text())
        for e in phys["sequences"]:
            (out / e["file"]).write_bytes((out / "phys" / e["file"]).read_bytes())
        main["sequences"] += phys["sequences"]
        (out / "corpus.json").write_text(
            json.dumps(main, indent=2, sort_keys=True) + "\n")

    mixed_corpus(tmp_path / "c1")
    mixed_corpus(tmp_path / "c2")
    corpora_equal = all(
        (tmp_path / "c1" / p.name).read_bytes() == p.read_bytes()
        for p in sorted((tmp_path / "c2").glob("*.mpfraw"))
    )

    for name in ("m1", "m2"):
        rc = cli.main(["train", "--corpus", str(tmp_path / "c1" / "corpus.json"),
                       "--out", str(tmp_path / f"{name}.json"), "--seed", "0"])
        assert rc == 0
    models_equal = ((tmp_path / "m1.json").read_bytes()
                    == (tmp_path / "m2.json").read_bytes())

    inputs = sorted(str(p) for p in (tmp_path / "c1").glob("decoder_*.mpfraw"))
    for name in ("r1", "r2"):
        rc = cli.main(["detect", "--pipeline", "--frames", *inputs,
                       "--model", str(tmp_path / "m1.json"),
                       "--out", str(tmp_path / f"{name}.json")])
        assert rc == 0
    reports_equal = ((tmp_path / "r1.json").read_bytes()
                     == (tmp_path / "r2.json").read_bytes())
    capsys.readouterr()

    report(
        "criterion 7 determinism",
        corpora_equal and models_equal and reports_equal,
        f"corpus bytes equal: {corpora_equal}, model bytes equal: "
        f"{models_equal}, report bytes equal: {reports_equal}",
    )
