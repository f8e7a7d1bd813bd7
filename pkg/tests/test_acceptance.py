"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 3-7 reproduce the split-MNIST experiments and need the four IDX
files (see tests/conftest.py: data/mnist/ or DEMIAN_MNIST_DIR). They carry
the ``mnist`` marker; deselect with ``-m "not mnist"`` for a fast run.
"""

import time

import numpy as np
import pytest

from conftest import require_mnist
from demian import (Demian, LinearCCA, cosine_retrieval_classify,
                    label_efficiency_curve, load_mnist_idx, make_validation_split,
                    split_left_right, srl_evaluate, synth_cca_dataset,
                    topk_correlation)
from demian.cli import main
from demian.selfcheck import gradient_check_layers, gradient_check_pairing

FULL_EPOCHS = 30        # criterion 4 requires >= 30
REDUCED_PAIRS = 10_000
REDUCED_EPOCHS = 20
# the MNIST discriminator width is unreported; 200 was selected on the
# validation split (the written-up experiments choose unreported settings
# by validation), see configs/mnist_srl.ini
DISC_HIDDEN = (200,)


def report(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    print(line)
    assert ok, line


# --------------------------------------------------------------- fixtures

@pytest.fixture(scope="session")
def mnist():
    paths = require_mnist()
    images, labels = load_mnist_idx(paths["train_images"], paths["train_labels"])
    train, valid = make_validation_split(split_left_right(images, labels), 6000, seed=0)
    images, labels = load_mnist_idx(paths["test_images"], paths["test_labels"])
    test = split_left_right(images, labels, split_tag="test")
    return train, valid, test


@pytest.fixture(scope="session")
def cca_full(mnist):
    """Criterion 3 artifacts: CCA embeddings and SRL accuracies at full scale."""
    train, _, test = mnist
    model = LinearCCA(n_components=50, reg="auto").fit(train.x, train.y)
    fx_tr, fy_tr = model.transform(train.x, train.y)
    fx_te, fy_te = model.transform(test.x, test.y)
    acc_lr = srl_evaluate(fx_tr, train.labels, fy_te, test.labels).accuracy
    acc_rl = srl_evaluate(fy_tr, train.labels, fx_te, test.labels,
                          train_modality="y", test_modality="x").accuracy
    return {"acc_lr": acc_lr, "acc_rl": acc_rl, "fx_te": fx_te, "fy_te": fy_te}


@pytest.fixture(scope="session")
def demian_full(mnist):
    """Criterion 4 artifacts: the full-scale adversarial run and embeddings."""
    train, _, test = mnist
    model = Demian(n_epochs=FULL_EPOCHS, disc_hidden_units=DISC_HIDDEN,
                   random_state=0)
    model.fit(train.x, train.y)
    fx_tr, fy_tr = model.transform(train.x, train.y)
    fx_te, fy_te = model.transform(test.x, test.y)
    acc_lr = srl_evaluate(fx_tr, train.labels, fy_te, test.labels).accuracy
    return {"model": model, "acc_lr": acc_lr, "fx_tr": fx_tr,
            "fx_te": fx_te, "fy_te": fy_te}


@pytest.fixture(scope="session")
def reduced(mnist):
    """Criterion 4's reduced run: 10,000 pairs, 20 epochs, plus CCA on the subset."""
    train, _, test = mnist
    sub = train.subset(np.arange(REDUCED_PAIRS))
    cca = LinearCCA(n_components=50, reg="auto").fit(sub.x, sub.y)
    cca_acc = srl_evaluate(cca.transform(X=sub.x), sub.labels,
                           cca.transform(Y=test.y), test.labels).accuracy
    model = Demian(n_epochs=REDUCED_EPOCHS, disc_hidden_units=DISC_HIDDEN,
                   random_state=0)
    model.fit(sub.x, sub.y)
    acc = srl_evaluate(model.transform(X=sub.x), sub.labels,
                       model.transform(Y=test.y), test.labels).accuracy
    return {"sub": sub, "cca_acc": cca_acc, "demian_acc": acc}


# -------------------------------------------------------------- criterion 1

def test_criterion_1_gradient_correctness():
    t0 = time.time()
    layers_ok = gradient_check_layers(seed=0, n_seeds=20)
    pairing_ok = gradient_check_pairing(seed=0, n_seeds=20)
    elapsed = time.time() - t0
    report(1, layers_ok and pairing_ok and elapsed < 30.0,
           f"finite-difference gradients (layers {layers_ok}, pairing {pairing_ok}) "
           f"in {elapsed:.1f}s (< 30s)")


# -------------------------------------------------------------- criterion 2

def test_criterion_2_cca_planted_oracle():
    t0 = time.time()
    planted = np.array([0.9, 0.5, 0.1])
    data = synth_cca_dataset(10_000, 8, 6, planted, seed=0)
    model = LinearCCA(n_components=3, reg=1e-8).fit(data.x, data.y)
    err = np.abs(model.correlations_ - planted).max()
    elapsed = time.time() - t0
    report(2, err < 0.02 and elapsed < 10.0,
           f"planted (0.9, 0.5, 0.1) recovered within {err:.4f} (< 0.02) "
           f"in {elapsed:.1f}s (< 10s)")


# -------------------------------------------------------------- criterion 3

@pytest.mark.mnist
def test_criterion_3_cca_srl_bands(cca_full):
    lr, rl = cca_full["acc_lr"], cca_full["acc_rl"]
    ok = 0.66 <= lr <= 0.74 and 0.63 <= rl <= 0.71
    report(3, ok, f"CCA SRL left->right {lr:.4f} in [0.66, 0.74], "
                  f"right->left {rl:.4f} in [0.63, 0.71]")


# -------------------------------------------------------------- criterion 4

@pytest.mark.mnist
def test_criterion_4_demian_srl_band(cca_full, demian_full, reduced):
    acc = demian_full["acc_lr"]
    margin_ok = acc >= cca_full["acc_lr"] + 0.05
    band_ok = 0.75 <= acc <= 0.86
    red_ok = reduced["demian_acc"] >= reduced["cca_acc"] + 0.03
    report(4, band_ok and margin_ok and red_ok,
           f"left->right {acc:.4f} in [0.75, 0.86], >= CCA+0.05 "
           f"({cca_full['acc_lr'] + 0.05:.4f}); reduced run "
           f"{reduced['demian_acc']:.4f} >= subset CCA+0.03 "
           f"({reduced['cca_acc'] + 0.03:.4f})")


# -------------------------------------------------------------- criterion 5

@pytest.mark.mnist
def test_criterion_5_prior_ablation(mnist, demian_full):
    train, _, test = mnist
    accs = []
    for seed in (0, 1, 2):
        model = Demian(n_epochs=FULL_EPOCHS, disc_hidden_units=DISC_HIDDEN,
                       use_prior=False, random_state=seed)
        model.fit(train.x, train.y)
        accs.append(srl_evaluate(model.transform(X=train.x), train.labels,
                                 model.transform(Y=test.y), test.labels).accuracy)
    median = float(np.median(accs))
    with_prior = demian_full["acc_lr"]
    report(5, median <= with_prior - 0.03,
           f"no-prior median {median:.4f} (seeds {np.round(accs, 4).tolist()}) "
           f"<= with-prior {with_prior:.4f} - 0.03")


# -------------------------------------------------------------- criterion 6

@pytest.mark.mnist
def test_criterion_6_top50_correlations(cca_full, demian_full):
    cca_sum = topk_correlation(cca_full["fx_te"], cca_full["fy_te"], 50).top_k_sum
    demian_sum = topk_correlation(demian_full["fx_te"], demian_full["fy_te"], 50).top_k_sum
    ok = 26.0 <= cca_sum <= 30.0 and demian_sum >= 40.0 and demian_sum > cca_sum
    report(6, ok, f"top-50 correlation: CCA {cca_sum:.2f} in [26, 30], "
                  f"adversarial {demian_sum:.2f} >= 40 and > CCA")


# -------------------------------------------------------------- criterion 7

@pytest.mark.mnist
def test_criterion_7_label_efficiency(mnist, demian_full):
    train, _, test = mnist
    curve = label_efficiency_curve(demian_full["fx_tr"], train.labels,
                                   demian_full["fy_te"], test.labels, [1000], seed=0)
    gap = abs(curve[0].accuracy - demian_full["acc_lr"])
    report(7, gap <= 0.05,
           f"1000-label accuracy {curve[0].accuracy:.4f} within 0.05 of "
           f"full-label {demian_full['acc_lr']:.4f} (gap {gap:.4f})")


# -------------------------------------------------------------- criterion 8

def test_criterion_8_zero_shot_retrieval():
    rng = np.random.default_rng(0)
    theta = np.pi / 3
    classes = np.array([[1.0, 0.0], [np.cos(theta), np.sin(theta)]])
    offsets = rng.uniform(-np.pi / 9, np.pi / 9, 400)
    truth = rng.integers(0, 2, 400)
    angles = truth * theta + offsets
    queries = np.column_stack([np.cos(angles), np.sin(angles)])
    geometric = cosine_retrieval_classify(queries, classes, np.array([0, 1]))
    geometric_ok = np.array_equal(geometric.predictions, truth)

    scaled = cosine_retrieval_classify(queries * 1024.0, classes * 0.25,
                                       np.array([0, 1]))
    scale_ok = np.array_equal(scaled.predictions, geometric.predictions)

    tie = cosine_retrieval_classify(np.array([[1.0, 1.0]]), np.eye(2),
                                    np.array([9, 4]))
    tie_ok = tie.predictions[0] == 4
    report(8, geometric_ok and scale_ok and tie_ok,
           f"geometric 100% ({geometric_ok}), scale invariance exact ({scale_ok}), "
           f"tie to lowest id ({tie_ok})")


# -------------------------------------------------------------- criterion 9

def test_criterion_9_determinism(tmp_path):
    config = tmp_path / "exp.ini"
    config.write_text(
        "[data]\nkind = synthetic\nn_train = 400\nn_test = 200\ndim = 4\n"
        "n_classes = 3\nn_valid = 40\n"
        "[model]\ntype = demian\nembedding_dim = 3\nhidden = 16\ndisc_hidden = 16\n"
        "[train]\nlambda = 1.0\nlearning_rate = 1e-3\nbatch_size = 64\nepochs = 2\n"
        "seed = 3\n"
        "[eval]\nprotocols = srl_xy, topk\ntopk = 3\n"
        "[output]\ndir = PLACEHOLDER\n".replace("PLACEHOLDER", str(tmp_path / "t1"))
    )
    assert main(["train", "--config", str(config)]) == 0
    assert main(["train", "--config", str(config), "--out", str(tmp_path / "t2")]) == 0
    train_same = ((tmp_path / "t1" / "metrics.csv").read_bytes()
                  == (tmp_path / "t2" / "metrics.csv").read_bytes())

    assert main(["selftest", "--seed", "0", "--out", str(tmp_path / "s1")]) == 0
    assert main(["selftest", "--seed", "0", "--out", str(tmp_path / "s2")]) == 0
    selftest_same = ((tmp_path / "s1" / "metrics.csv").read_bytes()
                     == (tmp_path / "s2" / "metrics.csv").read_bytes())
    report(9, train_same and selftest_same,
           f"byte-identical metrics for repeated train ({train_same}) "
           f"and selftest ({selftest_same}) runs")
