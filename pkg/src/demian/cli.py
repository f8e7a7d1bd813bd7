"""Command-line entry points: train, eval, embed, cca, selftest."""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import selfcheck
from .cca import LinearCCA
from .config import apply_overrides, load_config
from .data import (PairedDataset, load_mnist_idx, make_validation_split,
                   split_left_right, synth_rotation_dataset)
from .evaluation import (cosine_retrieval_classify, label_efficiency_curve,
                         srl_evaluate, topk_correlation)
from .model import Demian
from .serialize import (load_checkpoint, save_checkpoint, save_embeddings,
                        write_history, write_metrics, write_summary)


def load_datasets(cfg):
    """Materialize (train, valid, test) PairedDatasets from a config."""
    d = cfg.data
    if d.kind == "mnist":
        images, labels = load_mnist_idx(d.train_images, d.train_labels)
        train = split_left_right(images, labels, split_tag="train")
        images, labels = load_mnist_idx(d.test_images, d.test_labels)
        test = split_left_right(images, labels, split_tag="test")
    else:
        angle = d.angle if d.angle == "random" else float(d.angle)
        # one draw, then split: train and test share mixture centers and the
        # rotation, so labels mean the same thing in both splits
        pool = synth_rotation_dataset(d.n_train + d.n_test, d.dim, angle, d.noise,
                                      seed=cfg.train.seed, n_classes=d.n_classes)
        train = pool.subset(np.arange(d.n_train), split_tag="train")
        test = pool.subset(np.arange(d.n_train, pool.n), split_tag="test")
    if d.limit_train and d.limit_train < train.n:
        train = train.subset(np.arange(d.limit_train))
    valid = PairedDataset(x=np.empty((0, train.x.shape[1])),
                          y=np.empty((0, train.y.shape[1])),
                          split_tag="valid")
    if d.n_valid:
        train, valid = make_validation_split(train, d.n_valid, seed=cfg.train.seed)
    return train, valid, test


def build_model(cfg):
    if cfg.model.type == "cca":
        reg = "auto" if cfg.cca.reg == "auto" else float(cfg.cca.reg)
        return LinearCCA(n_components=cfg.cca.components, reg=reg)
    t = cfg.train
    return Demian(
        n_components=cfg.model.embedding_dim,
        hidden_units=cfg.model.hidden,
        activation=cfg.model.activation,
        distance=t.distance,
        lam=t.lam,
        disc_steps=t.k,
        disc_hidden_units=cfg.model.disc_hidden,
        learning_rate=t.learning_rate,
        beta1=t.beta1,
        weight_decay=t.weight_decay,
        batch_size=t.batch_size,
        n_epochs=t.epochs,
        use_prior=t.use_prior,
        bn_momentum=t.bn_momentum,
        output_norm=cfg.model.output_norm,
        select_best=t.select_best,
        random_state=t.seed,
    )


def _classifier_params(cfg):
    return {"reg": cfg.eval.classifier_reg,
            "learning_rate": cfg.eval.classifier_lr,
            "max_iter": cfg.eval.classifier_max_iter}


def run_evaluations(cfg, train_emb, train_labels, test_emb, test_labels):
    """Run the configured protocols; returns metric rows for the CSV."""
    rows = []
    seed = cfg.train.seed
    clf = _classifier_params(cfg)

    def srl(train_mod, test_mod):
        if train_labels is None or test_labels is None:
            raise ValueError("SRL protocols need labeled data")
        res = srl_evaluate(train_emb, train_labels, test_emb, test_labels,
                           train_modality=train_mod, test_modality=test_mod, **clf)
        rows.append({"metric": "srl_accuracy", "split": "test",
                     "train_modality": train_mod, "test_modality": test_mod,
                     "value": res.accuracy, "seed": seed})

    for protocol in cfg.eval.protocols:
        if protocol == "srl_xy":
            srl("x", "y")
        elif protocol == "srl_yx":
            srl("y", "x")
        elif protocol == "topk":
            report = topk_correlation(test_emb.x, test_emb.y, cfg.eval.topk)
            rows.append({"metric": f"top{cfg.eval.topk}_correlation", "split": "test",
                         "train_modality": "x", "test_modality": "y",
                         "value": report.top_k_sum, "seed": seed})
        elif protocol == "label_curve":
            results = label_efficiency_curve(train_emb, train_labels, test_emb,
                                             test_labels, cfg.eval.label_sizes,
                                             seed=seed, **clf)
            for res in results:
                rows.append({"metric": f"srl_accuracy@{res.n_labeled}", "split": "test",
                             "train_modality": "x", "test_modality": "y",
                             "value": res.accuracy, "seed": seed})
        elif protocol == "zero_shot":
            if train_labels is None or test_labels is None:
                raise ValueError("zero_shot protocol needs labeled data")
            classes = np.unique(train_labels)
            centroids = np.stack([train_emb.y[train_labels == c].mean(axis=0)
                                  for c in classes])
            result = cosine_retrieval_classify(test_emb.x, centroids, classes)
            acc = float((result.predictions == test_labels).mean())
            rows.append({"metric": "zero_shot_accuracy", "split": "test",
                         "train_modality": "y", "test_modality": "x",
                         "value": acc, "seed": seed})
    return rows


def run_experiment(cfg):
    """Train per config, evaluate, and write all artifacts; returns exit status."""
    out_dir = Path(cfg.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, valid, test = load_datasets(cfg)

    model = build_model(cfg)
    if isinstance(model, Demian):
        validation = (valid.x, valid.y) if valid.n else None
        model.fit(train.x, train.y, validation_data=validation)
        write_history(out_dir / "history.csv", model.history_)
    else:
        model.fit(train.x, train.y)

    train_emb = model.embed(train.x, train.y, split_tag="train")
    test_emb = model.embed(test.x, test.y, split_tag="test")

    rows = run_evaluations(cfg, train_emb, train.labels, test_emb, test.labels)
    write_metrics(out_dir / "metrics.csv", rows)

    if cfg.output.save_checkpoint:
        save_checkpoint(out_dir / f"checkpoint.{cfg.model.type}", model)
    if cfg.output.save_embeddings:
        emb_dir = out_dir / "embeddings"
        save_embeddings(emb_dir, train_emb, cfg.output.embedding_format)
        save_embeddings(emb_dir, test_emb, cfg.output.embedding_format)

    summary = {
        "model": cfg.model.type,
        "seed": cfg.train.seed,
        "n_train": train.n,
        "n_valid": valid.n,
        "n_test": test.n,
        "metrics": {f"{r['metric']}:{r['train_modality']}->{r['test_modality']}": r["value"]
                    for r in rows},
    }
    write_summary(out_dir / "summary.json", summary)
    for row in rows:
        print(f"{row['metric']} {row['train_modality']}->{row['test_modality']}: "
              f"{row['value']:.4f}")
    return 0


def cmd_train(args):
    cfg = apply_overrides(load_config(args.config), seed=args.seed, out=args.out,
                          no_prior=args.no_prior, distance=args.distance,
                          lam=args.lam, epochs=args.epochs)
    return run_experiment(cfg)


def cmd_cca(args):
    cfg = apply_overrides(load_config(args.config), seed=args.seed, out=args.out)
    cfg.model.type = "cca"
    return run_experiment(cfg)


def cmd_eval(args):
    cfg = apply_overrides(load_config(args.config), seed=args.seed, out=args.out)
    out_dir = Path(cfg.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = load_checkpoint(args.checkpoint)
    train, _, test = load_datasets(cfg)
    train_emb = model.embed(train.x, train.y, split_tag="train")
    test_emb = model.embed(test.x, test.y, split_tag="test")
    rows = run_evaluations(cfg, train_emb, train.labels, test_emb, test.labels)
    write_metrics(out_dir / "metrics.csv", rows)
    for row in rows:
        print(f"{row['metric']} {row['train_modality']}->{row['test_modality']}: "
              f"{row['value']:.4f}")
    return 0


def cmd_embed(args):
    cfg = apply_overrides(load_config(args.config), seed=args.seed, out=args.out)
    out_dir = Path(cfg.output.dir)
    model = load_checkpoint(args.checkpoint)
    train, _, test = load_datasets(cfg)
    fmt = args.format or cfg.output.embedding_format
    splits = {"train": train, "test": test}
    wanted = ("train", "test") if args.split == "both" else (args.split,)
    for tag in wanted:
        ds = splits[tag]
        emb = model.embed(ds.x, ds.y, split_tag=tag)
        for path in save_embeddings(out_dir / "embeddings", emb, fmt):
            print(f"wrote {path}")
    return 0


def cmd_selftest(args):
    results = selfcheck.run_all(seed=args.seed)
    failures = [name for name, ok in results if not ok]
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = [{"metric": f"selftest:{name}", "split": "", "train_modality": "",
                 "test_modality": "", "value": 1.0 if ok else 0.0, "seed": args.seed}
                for name, ok in results]
        write_metrics(out_dir / "metrics.csv", rows)
        write_summary(out_dir / "summary.json",
                      {"passed": len(results) - len(failures), "failed": len(failures),
                       "seed": args.seed})
    print(f"{len(results) - len(failures)}/{len(results)} checks passed")
    return 0 if not failures else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="demian",
        description="Train and evaluate modality-invariant representations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, checkpoint=False):
        p.add_argument("--config", required=True, help="experiment INI file")
        p.add_argument("--seed", type=int, default=None, help="override [train] seed")
        p.add_argument("--out", default=None, help="override [output] dir")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="model checkpoint path")

    p = sub.add_parser("train", help="train a model and run the configured evaluations")
    add_common(p)
    p.add_argument("--no-prior", action="store_true",
                   help="drop the Gaussian prior class (ablation)")
    p.add_argument("--distance", choices=("l2sq", "cosine"), default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="adversarial weight")
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cca", help="fit the linear CCA baseline on the configured data")
    add_common(p)
    p.set_defaults(func=cmd_cca)

    p = sub.add_parser("eval", help="run evaluations for a saved checkpoint")
    add_common(p, checkpoint=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("embed", help="write embeddings for a saved checkpoint")
    add_common(p, checkpoint=True)
    p.add_argument("--split", choices=("train", "test", "both"), default="both")
    p.add_argument("--format", choices=("binary", "text"), default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("selftest", help="run gradient checks and oracle suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="directory for a metrics file")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
