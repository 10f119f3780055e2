"""Acceptance suite: one test per release criterion, each printing a
pass/fail line. Tolerances are fixed here and nowhere else.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion
lines as they complete.
"""

import json
import math
import sys
import time
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from newsmil import synthetic
from newsmil.active import SamplerConfig, sample_uncertain, uncertainty_weight
from newsmil.baseline import fit_transform, loss_and_grad, train_linear, evaluate_baseline, article_tokens
from newsmil.corpus import ActionClass, TargetClass
from newsmil.dedup import IncidentRecord, find_duplicates
from newsmil.detector import (
    MilConfig,
    _article_graph,
    evaluate,
    init_mil_model,
    predict,
    top_k_mean,
    train,
)
from newsmil.extractor import (
    ExtractorConfig,
    _graph as extractor_graph,
    example_loss,
    extract,
    init_extractor,
    train_multitask,
)
from newsmil.ndlearn import (
    Tensor,
    bce_loss,
    bilstm_forward,
    conv_bank_forward,
    dense,
    grad_check,
    init_bilstm,
    init_conv_bank,
    init_dense,
)
from newsmil.ndlearn.tensor import mean_scalars, tsum
from newsmil.stats import (
    cohen_kappa,
    regularized_incomplete_beta,
    welch_anova,
)

REPO_ROOT = Path(__file__).resolve().parent.parent

GRAD_TOL = 1e-4            # max relative error, eps = 1e-5, float64
GRAD_RUNTIME_S = 120
OVERFIT_F1 = 0.95
OVERFIT_KEY_RATE = 0.80
OVERFIT_RUNTIME_S = 300
BETA_IDENTITY_TOL = 1e-12
WELCH_INVARIANCE_TOL = 1e-9
WELCH_CLASSIC_TOL = 1e-6
REFERENCE_SIGFIG_TOL = 1e-4   # "4 significant figures"
SAMPLER_MEAN_TOL = 0.02
SAMPLER_STD_TOL = 0.03
E2E_RUNTIME_S = 600
TFIDF_MATRIX_TOL = 1e-12
TFIDF_F1 = 0.9
TFIDF_GRAD_TOL = 1e-6


@pytest.fixture(autouse=True)
def criterion_line(request):
    """Print '[PASS|FAIL] <criterion>' after each acceptance test."""
    started = time.monotonic()
    yield
    report = getattr(request.node, "rep_call", None)
    verdict = "PASS" if report is not None and report.passed else "FAIL"
    name = request.node.name
    elapsed = time.monotonic() - started
    print(f"[{verdict}] {name} ({elapsed:.1f}s)", file=sys.stderr)


class TestGradientIntegrity:
    """Every layer and both composed models check out against central
    finite differences; a corrupted gradient is caught."""

    def test_gradient_integrity(self):
        t0 = time.monotonic()
        rng = np.random.default_rng(1)

        # each layer in isolation
        lstm = init_bilstm(rng, input_dim=3, hidden_dim=4)
        seq = rng.normal(size=(5, 3))

        def lstm_loss():
            _, summary = bilstm_forward([Tensor(x) for x in seq], lstm)
            return tsum(summary * summary)

        assert grad_check(lstm_loss, lstm.tensors(), eps=1e-5) < GRAD_TOL

        conv = init_conv_bank(rng, input_dim=4, widths=(2, 3), n_filters=3)
        cseq = rng.normal(size=(6, 4))

        def conv_loss():
            out = conv_bank_forward([Tensor(x) for x in cseq], conv)
            return tsum(out * out)

        assert grad_check(conv_loss, conv.tensors(), eps=1e-5) < GRAD_TOL

        head = init_dense(rng, 6, 3)
        x = rng.normal(size=6)

        def dense_loss():
            return tsum(dense(Tensor(x), head, "softmax") * Tensor(rng_free))

        rng_free = np.array([0.2, 0.5, 0.3])
        assert grad_check(dense_loss, head.tensors(), eps=1e-5) < GRAD_TOL

        p = Tensor(np.asarray(0.37), requires_grad=True)
        assert grad_check(lambda: bce_loss(p, 1), {"p": p}, eps=1e-5) < GRAD_TOL

        # composed detector on a 3-article batch
        corpus = synthetic.make_trigger_corpus(n_articles=3, seed=7,
                                               sentences_range=(2, 4),
                                               tokens_range=(3, 5))
        table = synthetic.corpus_embeddings(corpus, dim=8, seed=3)
        cfg = MilConfig(hidden_dim=5, conv_widths=(2, 3), n_filters=4, k=2,
                        embedding_dim=8, seed=11)
        detector_model = init_mil_model(cfg)
        scr = np.random.default_rng(5)
        detector_model.scorer.weight.data[:] = scr.normal(
            scale=0.3, size=detector_model.scorer.weight.data.shape)
        labeled = corpus.labeled()

        def detector_loss():
            losses = []
            for art, y in labeled:
                bag, _, _ = _article_graph(art, detector_model, table, False, None)
                losses.append(bce_loss(bag, int(y)))
            return mean_scalars(losses)

        assert grad_check(detector_loss, detector_model.tensors(), eps=1e-5) < GRAD_TOL

        # composed multitask extractor
        ext_cfg = ExtractorConfig(hidden_dim=5, embedding_dim=8, seed=2)
        ext = init_extractor(ext_cfg)
        hr = np.random.default_rng(8)
        ext.target_head.weight.data[:] = hr.normal(scale=0.3,
                                                   size=ext.target_head.weight.data.shape)
        ext.action_head.weight.data[:] = hr.normal(scale=0.3,
                                                   size=ext.action_head.weight.data.shape)
        ext_table = synthetic.extraction_embeddings(dim=8, seed=4)
        ex_corpus = synthetic.make_extraction_corpus(per_target=1, seed=5)
        batch = ex_corpus.examples[:3]

        def extractor_loss():
            from newsmil.ndlearn import cross_entropy
            from newsmil.extractor import TARGETS, ACTIONS
            from newsmil.ndlearn.tensor import add
            losses = []
            for tokens, target, action in batch:
                t_probs, a_probs = extractor_graph(tokens, ext, ext_table, False, None)
                losses.append(add(cross_entropy(t_probs, TARGETS.index(target)),
                                  cross_entropy(a_probs, ACTIONS.index(action))))
            return mean_scalars(losses)

        assert grad_check(extractor_loss, ext.tensors(), eps=1e-5) < GRAD_TOL

        # a deliberately corrupted gradient must fail the check
        w = Tensor(np.random.default_rng(3).normal(size=5), requires_grad=True)

        def doubled(t):
            def backward(g):
                t._accumulate(2.0 * g)
            return Tensor._make(t.data.copy(), (t,), backward)

        assert grad_check(lambda: tsum(doubled(w)), {"w": w}) > 0.3

        assert time.monotonic() - t0 < GRAD_RUNTIME_S


class TestSyntheticOverfit:
    """The detector overfits a 50-article planted-trigger corpus and its
    key sentences point at the planted sentence."""

    def test_synthetic_overfit(self):
        t0 = time.monotonic()
        corpus = synthetic.make_trigger_corpus(n_articles=50, seed=7)
        table = synthetic.corpus_embeddings(corpus, dim=16, seed=3)
        cfg = MilConfig(hidden_dim=12, conv_widths=(2, 3), n_filters=6,
                        dropout=0.25, k=2, learning_rate=0.01, batch_size=5,
                        epochs=40, embedding_dim=16, seed=11)
        assert cfg.epochs <= 50
        labeled = corpus.labeled()
        model, history = train(labeled, [], cfg, table)
        results = predict([a for a, _ in labeled], model, table)
        metrics = evaluate(results, corpus.labels)
        assert metrics.f1 >= OVERFIT_F1

        hits = total = 0
        for r in results:
            if corpus.labels[r.article_id]:
                total += 1
                hits += corpus.trigger_index[r.article_id] in r.key_sentence_indices
        assert hits / total >= OVERFIT_KEY_RATE
        assert time.monotonic() - t0 < OVERFIT_RUNTIME_S


class TestPoolingProperties:
    """top_k_mean: exact examples plus permutation invariance,
    boundedness and monotonicity over 1000 random cases."""

    def test_pooling_properties(self):
        assert top_k_mean([0.9, 0.1, 0.8], 2) == pytest.approx(0.85)
        assert top_k_mean([0.4, 0.4, 0.4], 3) == pytest.approx(0.4)
        assert top_k_mean([0.2], 3) == pytest.approx(0.2)

        rng = np.random.default_rng(99)
        for _ in range(1000):
            n = int(rng.integers(1, 20))
            scores = rng.random(n).tolist()
            k = int(rng.integers(1, 25))
            value = top_k_mean(scores, k)
            assert min(scores) - 1e-12 <= value <= max(scores) + 1e-12
            shuffled = [scores[i] for i in rng.permutation(n)]
            assert top_k_mean(shuffled, k) == pytest.approx(value, abs=1e-12)
            i = int(rng.integers(0, n))
            bumped = list(scores)
            bumped[i] = min(1.0, bumped[i] + float(rng.random()) * 0.2)
            assert top_k_mean(bumped, k) >= value - 1e-12


class TestExtraction:
    """Initialization loss, planted-vocabulary accuracy, and
    distribution normalization."""

    def test_extraction(self):
        table = synthetic.extraction_embeddings(dim=12, seed=4)
        cfg = ExtractorConfig(hidden_dim=10, learning_rate=0.01, epochs=30,
                              embedding_dim=12, seed=6)
        fresh = init_extractor(cfg)
        loss0 = example_loss(([
            "w001", "w002"], TargetClass.GENDER, ActionClass.ARSON), fresh, table)
        assert abs(loss0 - (math.log(8) + math.log(4))) < 1e-6

        corpus = synthetic.make_extraction_corpus(per_target=10, seed=5)
        model, _ = train_multitask(corpus.examples, cfg, table)
        per_class: dict[str, list[bool]] = {}
        for tokens, target, action in corpus.examples:
            r = extract(tokens, model, table)
            assert abs(sum(r.target_distribution) - 1.0) <= 1e-9
            assert abs(sum(r.action_distribution) - 1.0) <= 1e-9
            per_class.setdefault(f"target:{target.value}", []).append(r.target is target)
            per_class.setdefault(f"action:{action.value}", []).append(r.action is action)
        worst = min(float(np.mean(v)) for v in per_class.values())
        assert worst >= 0.9, f"worst per-class accuracy {worst}"


class TestDedupOracle:
    """Bucketed dedup equals the brute-force pairwise predicate, and the
    678-record fixture reproduces the 20-pair / 658-unique arithmetic."""

    def test_dedup_oracle(self):
        from tests.test_dedup import brute_force_edges, random_records
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = int(rng.integers(0, 201))
            records = random_records(rng, n)
            report = find_duplicates(records)
            assert {frozenset(p) for p in report.duplicate_pairs} == brute_force_edges(records)

        records = synthetic.make_dedup_records(n_unique=658, n_duplicate_pairs=20, seed=3)
        assert len(records) == 678
        report = find_duplicates(records)
        assert len(report.duplicate_pairs) == 20
        assert report.unique_count == 658


class TestWelchStack:
    """Invariances, classic-ANOVA agreement, beta identity, and the
    frozen independent-oracle reference values."""

    def test_welch_stack(self):
        rng = np.random.default_rng(23)
        groups = [rng.normal(m, s, size=n).tolist()
                  for m, s, n in ((0.0, 1.0, 9), (1.0, 2.5, 14), (0.5, 0.7, 11))]
        base = welch_anova(groups)
        for shift, scale in ((17.3, 1.0), (0.0, 0.013), (-4.2, 250.0)):
            moved = welch_anova([[scale * (x + shift) for x in g] for g in groups])
            assert moved.F == pytest.approx(base.F, rel=WELCH_INVARIANCE_TOL)
            assert moved.df2 == pytest.approx(base.df2, rel=WELCH_INVARIANCE_TOL)
            assert moved.p == pytest.approx(base.p, rel=WELCH_INVARIANCE_TOL)

        # equal sample variances, equal n: exact for two groups, and the
        # O(1/n) Welch correction sits below 1e-6 at n = 4e5 for three
        from tests.test_stats import classic_anova_f
        base2 = [1.1, 2.0, 2.9, 4.2, 5.1, 5.8, 7.0, 8.3]
        two = [base2, [x + 2.5 for x in base2]]
        assert welch_anova(two).F == pytest.approx(classic_anova_f(two), rel=1e-12)
        big = np.linspace(0.0, 5.0, 400_000).tolist()
        three = [big, [x + 1.0 for x in big], [x + 2.0 for x in big]]
        welch_f = welch_anova(three).F
        classic_f = classic_anova_f(three)
        assert abs(welch_f - classic_f) / classic_f < WELCH_CLASSIC_TOL

        rng = np.random.default_rng(29)
        for _ in range(300):
            a = float(rng.uniform(0.5, 50))
            b = float(rng.uniform(0.5, 50))
            x = float(rng.uniform(1e-9, 1 - 1e-9))
            total = (regularized_incomplete_beta(x, a, b)
                     + regularized_incomplete_beta(1 - x, b, a))
            assert abs(total - 1.0) <= BETA_IDENTITY_TOL

        # frozen reference dataset (independent oracle, 4 significant figures)
        from tests.test_stats import G1, G2, G3
        result = welch_anova([G1, G2, G3])
        assert result.F == pytest.approx(3.108080884206345, rel=REFERENCE_SIGFIG_TOL)
        assert result.df2 == pytest.approx(16.078177507895663, rel=REFERENCE_SIGFIG_TOL)
        assert result.p == pytest.approx(0.07224183220996802, rel=REFERENCE_SIGFIG_TOL)


class TestCohenKappa:
    """Exact agreement, the hand-computed fixture, and symmetry on 100
    random instances."""

    def test_cohen_kappa(self):
        labels = ["a", "b", "a", "c"] * 5
        assert cohen_kappa(labels, labels) == pytest.approx(1.0)

        # 45 yy, 10 nn, 5 yn, 10 ny -> kappa = 16/37 by hand
        a = ["y"] * 45 + ["n"] * 10 + ["y"] * 5 + ["n"] * 10
        b = ["y"] * 45 + ["n"] * 10 + ["n"] * 5 + ["y"] * 10
        assert cohen_kappa(a, b) == pytest.approx(16 / 37, abs=1e-12)

        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(1, 80))
            xs = rng.choice(["p", "q", "r"], size=n).tolist()
            ys = rng.choice(["p", "q", "r"], size=n).tolist()
            assert cohen_kappa(xs, ys) == pytest.approx(cohen_kappa(ys, xs), abs=1e-12)


class TestActiveSampler:
    """Monte-Carlo concentration, determinism, and the closed-form
    density ratio."""

    def test_active_sampler(self):
        rng = np.random.default_rng(12)
        pool = [(f"a{i}", float(p)) for i, p in enumerate(rng.random(10_000))]
        queue = sample_uncertain(pool, SamplerConfig(n_samples=1_000, seed=5))
        sampled = np.array([item.bag_probability for item in queue.items])
        assert abs(sampled.mean() - 0.5) < SAMPLER_MEAN_TOL
        assert abs(sampled.std() - 0.1) < SAMPLER_STD_TOL

        again = sample_uncertain(pool, SamplerConfig(n_samples=1_000, seed=5))
        assert [i.to_json() for i in queue.items] == [i.to_json() for i in again.items]

        ratio = uncertainty_weight(0.5) / uncertainty_weight(0.8)
        assert ratio == pytest.approx(math.exp(4.5), rel=1e-12)
        assert round(ratio, 2) == 90.02


class TestEndToEndDeterminism:
    """The full CLI pipeline over the shipped fixtures, run twice with
    one seed, produces byte-identical artifacts."""

    def test_end_to_end_determinism(self, tmp_path):
        t0 = time.monotonic()
        import importlib.util
        spec = importlib.util.spec_from_file_location(
            "run_synthetic_pipeline", REPO_ROOT / "scripts" / "run_synthetic_pipeline.py")
        runner = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(runner)

        out1, out2 = tmp_path / "run1", tmp_path / "run2"
        runner.run(out1)
        runner.run(out2)

        names1 = sorted(p.name for p in out1.iterdir())
        names2 = sorted(p.name for p in out2.iterdir())
        assert names1 == names2
        compared = 0
        for name in names1:
            if name.startswith("manifest-"):
                m1 = json.loads((out1 / name).read_text())
                m2 = json.loads((out2 / name).read_text())
                for doc in (m1, m2):
                    doc.pop("started_at"), doc.pop("finished_at")
                    doc["outputs"] = [Path(o).name for o in doc["outputs"]]
                    # same digests under run-local paths is the real check
                    doc["inputs"] = {Path(k).name: v for k, v in doc["inputs"].items()}
                assert m1 == m2, f"manifest {name} differs beyond timestamps"
                continue
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), \
                f"artifact {name} differs between runs"
            compared += 1
        assert compared >= 15
        # key artifacts all exist
        for required in ("detector.json", "extractor.json", "baseline.json",
                         "predictions.jsonl", "extractions.jsonl",
                         "incidents-hate.jsonl", "dedup-report.json",
                         "stats.json", "queue.jsonl", "kappa.json"):
            assert (out1 / required).exists(), f"missing artifact {required}"
        assert time.monotonic() - t0 < E2E_RUNTIME_S


class TestTfidfBaseline:
    """Hand-computed matrix, separable-corpus F1, and the convex
    training gradient against finite differences."""

    def test_tfidf_baseline(self):
        from tests.test_baseline import DOCS5
        vec, matrix = fit_transform(DOCS5)
        idf_cat = math.log(6 / 4) + 1
        idf_other = math.log(6 / 3) + 1

        def unit(entries):
            row = np.zeros(4)
            for col, val in entries.items():
                row[col] = val
            return row / np.linalg.norm(row)

        expected = np.stack([
            unit({0: idf_cat, 2: idf_other}),
            unit({0: 2 * idf_cat, 3: idf_other}),
            unit({2: idf_other, 1: idf_other}),
            unit({0: idf_cat}),
            unit({1: 3 * idf_other, 3: idf_other}),
        ])
        np.testing.assert_allclose(matrix, expected, atol=TFIDF_MATRIX_TOL)

        corpus = synthetic.make_trigger_corpus(n_articles=60, seed=21)
        docs = [article_tokens(a) for a in corpus.articles]
        vec, X = fit_transform(docs)
        labels = [int(corpus.labels[a.id]) for a in corpus.articles]
        model, _ = train_linear(X, labels)
        metrics = evaluate_baseline(model, vec, corpus.articles, corpus.labels)
        assert metrics.f1 >= TFIDF_F1

        rng = np.random.default_rng(9)
        Xg = rng.random((12, 6))
        yg = np.array([1, 0] * 6, dtype=np.float64)
        w, b, l2 = rng.normal(size=6), 0.3, 0.01
        _, grad_w, grad_b = loss_and_grad(w, b, Xg, yg, l2)
        eps = 1e-6
        for i in range(6):
            wp, wm = w.copy(), w.copy()
            wp[i] += eps
            wm[i] -= eps
            numeric = (loss_and_grad(wp, b, Xg, yg, l2)[0]
                       - loss_and_grad(wm, b, Xg, yg, l2)[0]) / (2 * eps)
            rel = abs(grad_w[i] - numeric) / max(abs(grad_w[i]), abs(numeric), 1e-8)
            assert rel < TFIDF_GRAD_TOL
