"""Experiment configuration: an INI file with typed sections, plus CLI overrides.

Sections and keys (all optional unless noted):

    [data]    kind = mnist | synthetic (required)
              mnist:     train_images, train_labels, test_images, test_labels,
                         n_valid, limit_train
              synthetic: n_train, n_test, dim, angle, noise, n_classes
    [model]   type = demian | cca, embedding_dim, hidden, activation,
              disc_hidden, output_norm
    [train]   lambda, k, learning_rate, beta1, weight_decay, batch_size, epochs,
              distance, use_prior, bn_momentum, seed, select_best
    [cca]     components, reg
    [eval]    protocols (srl_xy, srl_yx, topk, label_curve, zero_shot), topk,
              label_sizes, classifier_reg, classifier_lr, classifier_max_iter
    [output]  dir (required), save_embeddings, save_checkpoint, embedding_format
"""

import configparser
from dataclasses import dataclass, field, fields

KNOWN_PROTOCOLS = ("srl_xy", "srl_yx", "topk", "label_curve", "zero_shot")


@dataclass
class DataConfig:
    kind: str = "synthetic"
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    n_valid: int = 0
    limit_train: int = 0
    n_train: int = 2000
    n_test: int = 1000
    dim: int = 8
    angle: str = "40"
    noise: float = 0.1
    n_classes: int = 4


@dataclass
class ModelConfig:
    type: str = "demian"
    embedding_dim: int = 50
    hidden: tuple = (1000,)
    activation: str = "relu"
    disc_hidden: tuple = (1000,)
    output_norm: bool = True


@dataclass
class TrainSettings:
    lam: float = 5.0
    k: int = 1
    learning_rate: float = 2e-4
    beta1: float = 0.5
    weight_decay: float = 1e-3
    batch_size: int = 500
    epochs: int = 50
    distance: str = "l2sq"
    use_prior: bool = True
    bn_momentum: float = 0.1
    seed: int = 0
    select_best: bool = False


@dataclass
class CcaConfig:
    components: int = 50
    reg: str = "auto"


@dataclass
class EvalConfig:
    protocols: tuple = ("srl_xy", "srl_yx", "topk")
    topk: int = 50
    label_sizes: tuple = ()
    classifier_reg: float = 1e-4
    classifier_lr: float = 0.05
    classifier_max_iter: int = 2000


@dataclass
class OutputConfig:
    dir: str = "runs/experiment"
    save_embeddings: bool = True
    save_checkpoint: bool = True
    embedding_format: str = "binary"


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainSettings = field(default_factory=TrainSettings)
    cca: CcaConfig = field(default_factory=CcaConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self):
        if self.data.kind not in ("mnist", "synthetic"):
            raise ValueError(f"[data] kind must be 'mnist' or 'synthetic', got {self.data.kind!r}")
        if self.data.kind == "mnist":
            missing = [k for k in ("train_images", "train_labels", "test_images", "test_labels")
                       if not getattr(self.data, k)]
            if missing:
                raise ValueError(f"[data] kind=mnist needs paths for: {', '.join(missing)}")
        if self.model.type not in ("demian", "cca"):
            raise ValueError(f"[model] type must be 'demian' or 'cca', got {self.model.type!r}")
        if self.model.embedding_dim < 1:
            raise ValueError(f"[model] embedding_dim must be >= 1, got {self.model.embedding_dim}")
        if any(w < 1 for w in self.model.hidden) or any(w < 1 for w in self.model.disc_hidden):
            raise ValueError("[model] layer widths must be >= 1")
        unknown = [p for p in self.eval.protocols if p not in KNOWN_PROTOCOLS]
        if unknown:
            raise ValueError(
                f"unknown eval protocols {unknown}; known: {', '.join(KNOWN_PROTOCOLS)}"
            )
        if "label_curve" in self.eval.protocols and not self.eval.label_sizes:
            raise ValueError("[eval] label_curve protocol needs label_sizes")
        if self.output.embedding_format not in ("binary", "text"):
            raise ValueError(
                f"[output] embedding_format must be 'binary' or 'text', "
                f"got {self.output.embedding_format!r}"
            )
        return self


# INI key -> dataclass field name, where they differ
_ALIASES = {("train", "lambda"): "lam"}


def _parse_value(raw, kind):
    if kind is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind is tuple:
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        return tuple(int(p) for p in parts)
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw.strip()


def load_config(path):
    """Parse an INI experiment file into a validated ExperimentConfig."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    cfg = ExperimentConfig()
    sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for section in parser.sections():
        if section not in sections:
            raise ValueError(
                f"unknown config section [{section}]; known: {', '.join(sections)}"
            )
        target = sections[section]
        known = {f.name: f for f in fields(target)}
        for key, raw in parser.items(section):
            name = _ALIASES.get((section, key), key)
            if name not in known:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            current = getattr(target, name)
            kind = type(current) if not isinstance(current, bool) else bool
            if name == "protocols":
                parts = tuple(p.strip() for p in raw.split(",") if p.strip())
                setattr(target, name, parts)
            elif section == "data" and name == "angle":
                setattr(target, name, raw.strip())
            elif section == "cca" and name == "reg":
                setattr(target, name, raw.strip())
            else:
                setattr(target, name, _parse_value(raw, kind))
    return cfg.validate()


def apply_overrides(cfg, seed=None, out=None, no_prior=False, distance=None,
                    lam=None, epochs=None):
    """Apply CLI flag overrides on top of a parsed config."""
    if seed is not None:
        cfg.train.seed = int(seed)
    if out is not None:
        cfg.output.dir = str(out)
    if no_prior:
        cfg.train.use_prior = False
    if distance is not None:
        cfg.train.distance = distance
    if lam is not None:
        cfg.train.lam = float(lam)
    if epochs is not None:
        cfg.train.epochs = int(epochs)
    return cfg.validate()
