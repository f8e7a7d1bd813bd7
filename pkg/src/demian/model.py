"""Adversarial learning of modality-invariant representations.

Two generator networks map the modalities into a shared d_z-dimensional
space. A three-class discriminator tries to tell apart embeddings of
modality x, embeddings of modality y, and standard-normal prior draws;
the generators are trained to fool it (gradient reversal scaled by
``lam``) while also pulling paired embeddings together with a distance
penalty. Optimization alternates ``disc_steps`` discriminator updates
with one generator update, all by Adam.
"""

import copy

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import as_paired_matrices, check_same_shape
from .data import EmbeddingSet
from .nn import ELU, BatchNorm, Dense, GaussianPrior, Network, ReLU, _log_softmax
from .optim import Adam

DISTANCES = ("l2sq", "cosine")
_COSINE_EPS = 1e-8


class TrainingDivergedError(RuntimeError):
    """Raised when a loss turns NaN/Inf during training."""


def pairing_loss(fx, fy, kind="l2sq"):
    """Mean distance between paired embeddings and its gradients.

    ``l2sq`` is the squared Euclidean distance; ``cosine`` is
    1 - cos(fx_i, fy_i) with an epsilon-guarded norm product. Returns
    ``(loss, (grad_fx, grad_fy))``.
    """
    fx = np.asarray(fx, dtype=np.float64)
    fy = np.asarray(fy, dtype=np.float64)
    check_same_shape(fx, fy)
    n = fx.shape[0]
    if kind == "l2sq":
        diff = fx - fy
        loss = float((diff * diff).sum() / n)
        g = (2.0 / n) * diff
        return loss, (g, -g)
    if kind == "cosine":
        na = np.linalg.norm(fx, axis=1)
        nb = np.linalg.norm(fy, axis=1)
        s = (fx * fy).sum(axis=1)
        p = na * nb + _COSINE_EPS
        loss = float(np.mean(1.0 - s / p))
        # rows with an exactly zero norm get zero gradient
        ok = (na > 0.0) & (nb > 0.0)
        sa = np.where(ok, s * nb / np.maximum(na, 1.0e-300), 0.0)
        sb = np.where(ok, s * na / np.maximum(nb, 1.0e-300), 0.0)
        gx = np.where(ok[:, None], (-fy + (sa / p)[:, None] * fx) / p[:, None], 0.0) / n
        gy = np.where(ok[:, None], (-fx + (sb / p)[:, None] * fy) / p[:, None], 0.0) / n
        return loss, (gx, gy)
    raise ValueError(f"unknown distance kind {kind!r}, expected one of {DISTANCES}")


def _adversarial_pass(disc, fx, fy, z=None, train=True, backward=True):
    """Shared forward (and optional backward) of the modality discriminator.

    The loss follows the per-pair convention: each group's cross entropy is
    averaged over the batch and the group means are summed, so the balance
    against the pairing term does not depend on whether the prior group is
    present. With no prior the softmax is restricted to the first two
    classes, so the prior logit receives exactly zero gradient.
    """
    m = fx.shape[0]
    check_same_shape(fx, fy)
    if z is not None and z.shape[1] != fx.shape[1]:
        raise ValueError(f"prior samples have {z.shape[1]} columns, embeddings {fx.shape[1]}")
    groups = [fx, fy] if z is None else [fx, fy, z]
    h = np.concatenate(groups, axis=0)
    labels = np.repeat(np.arange(len(groups)), m)
    logits = disc.forward(h, train=train)
    n_classes = logits.shape[1]
    active = len(groups)
    logp = _log_softmax(logits[:, :active])
    rows = np.arange(h.shape[0])
    ce_rows = -logp[rows, labels]
    disc_loss = float(ce_rows.sum() / m)
    gen_adv_loss = -float(ce_rows[: 2 * m].sum() / m)
    accuracy = float((logp.argmax(axis=1) == labels).mean())
    g_fx = g_fy = None
    if backward:
        dlogits = np.zeros((h.shape[0], n_classes))
        dlogits[:, :active] = np.exp(logp)
        dlogits[rows, labels] -= 1.0
        dlogits /= m
        dinput = disc.backward(dlogits)
        g_fx = dinput[:m]
        g_fy = dinput[m : 2 * m]
    return {
        "disc_loss": disc_loss,
        "gen_adv_loss": gen_adv_loss,
        "accuracy": accuracy,
        "g_fx": g_fx,
        "g_fy": g_fy,
    }


def adversarial_losses(disc, fx, fy, z=None):
    """Discriminator loss, generator adversarial loss, and input gradients.

    ``disc_loss`` is the summed-per-pair cross entropy over the groups
    (fx -> class 0, fy -> class 1, prior -> class 2); ``gen_adv_loss`` is
    minus its fx/fy part. The returned gradients are d(disc_loss)/d(fx, fy);
    the caller applies the reversal (scaling by -lam) for the generators.
    Parameter gradients of ``disc`` are accumulated as a side effect.
    """
    fx = np.asarray(fx, dtype=np.float64)
    fy = np.asarray(fy, dtype=np.float64)
    z = None if z is None else np.asarray(z, dtype=np.float64)
    out = _adversarial_pass(disc, fx, fy, z, train=True, backward=True)
    return out["disc_loss"], out["gen_adv_loss"], (out["g_fx"], out["g_fy"])


def make_generator(in_width, hidden_units, out_width, activation="relu",
                   bn_momentum=0.1, rng=None, output_norm=True):
    """Dense stack with the activation followed by BatchNorm per hidden layer.

    With ``output_norm`` the embedding layer itself is batch-normalized
    (no activation), which keeps the output scale of each component
    controlled and comparable to the unit-variance prior.
    """
    acts = {"relu": ReLU, "elu": ELU}
    if activation not in acts:
        raise ValueError(f"unknown activation {activation!r}, expected one of {tuple(acts)}")
    layers = []
    width = in_width
    for h in hidden_units:
        layers += [Dense(width, h, rng), acts[activation](), BatchNorm(h, bn_momentum)]
        width = h
    layers.append(Dense(width, out_width, rng))
    if output_norm:
        layers.append(BatchNorm(out_width, bn_momentum))
    return Network(layers)


def make_discriminator(in_width, hidden_units, rng=None, n_classes=3):
    """ReLU stack ending in a linear layer with one logit per source class."""
    layers = []
    width = in_width
    for h in hidden_units:
        layers += [Dense(width, h, rng), ReLU()]
        width = h
    layers.append(Dense(width, n_classes, rng))
    return Network(layers)


class _BatchStream:
    """Endless stream of disjoint index batches, reshuffled on wrap-around."""

    def __init__(self, n, batch_size, rng):
        self.n = n
        self.batch_size = batch_size
        self.rng = rng
        self._order = rng.permutation(n)
        self._pos = 0

    def next(self):
        if self._pos + self.batch_size > self.n:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        batch = self._order[self._pos : self._pos + self.batch_size]
        self._pos += self.batch_size
        return batch


def _discriminator_update(gx, gy, disc, opt, x, y, prior):
    """One discriminator step on a fresh batch; generators stay frozen."""
    fx = gx.forward(x, train=True)
    fy = gy.forward(y, train=True)
    z = None if prior is None else prior.sample(x.shape[0])
    disc.zero_grads()
    out = _adversarial_pass(disc, fx, fy, z)
    opt.step()
    return out


def _generator_update(gx, gy, disc, opt, x, y, prior, lam, distance,
                      pairing_weight=1.0):
    """One generator step: pairing gradients plus reversed adversarial gradients."""
    fx = gx.forward(x, train=True)
    fy = gy.forward(y, train=True)
    z = None if prior is None else prior.sample(x.shape[0])
    j_loss, (gjx, gjy) = pairing_loss(fx, fy, distance)
    out = _adversarial_pass(disc, fx, fy, z)
    gx.zero_grads()
    gy.zero_grads()
    gx.backward(pairing_weight * gjx - lam * out["g_fx"])
    gy.backward(pairing_weight * gjy - lam * out["g_fy"])
    opt.step()
    out["pairing_loss"] = j_loss
    return out


class Demian(BaseEstimator):
    """Modality-invariant embedding learner with a fit/transform interface.

    Parameters
    ----------
    n_components : width of the shared embedding space (d_z).
    hidden_units : hidden widths of each generator.
    activation : "relu" or "elu" for the generator hidden layers.
    distance : pairing distance, "l2sq" or "cosine".
    lam : weight of the adversarial term in the generator objective.
    disc_steps : discriminator updates per generator update (k).
    disc_hidden_units : hidden widths of the discriminator.
    learning_rate, beta1, weight_decay : Adam settings shared by both players.
    batch_size : paired samples per update; an equal number of prior draws
        joins every discriminator batch.
    n_epochs : passes over the paired data.
    use_prior : include the standard-normal third class. Without it the
        discriminator is trained on two classes only.
    bn_momentum : EMA rate of the BatchNorm running statistics.
    output_norm : batch-normalize the embedding layer output (no activation),
        keeping every component at a scale comparable to the prior draws.
    select_best : when validation data is passed to fit, keep the generator
        snapshot with the lowest validation objective instead of the final one.
    random_state : seed controlling initialization, shuffling, and the prior.

    Attributes (after fit)
    ----------------------
    generator_x_, generator_y_, discriminator_ : trained networks.
    history_ : dict of per-epoch arrays (losses, discriminator accuracy).
    """

    def __init__(self, n_components=50, hidden_units=(1000,), activation="relu",
                 distance="l2sq", lam=5.0, disc_steps=1, disc_hidden_units=(1000,),
                 learning_rate=2e-4, beta1=0.5, weight_decay=1e-3, batch_size=500,
                 n_epochs=50, use_prior=True, bn_momentum=0.1, output_norm=True,
                 select_best=False, random_state=0):
        self.n_components = n_components
        self.hidden_units = hidden_units
        self.activation = activation
        self.distance = distance
        self.lam = lam
        self.disc_steps = disc_steps
        self.disc_hidden_units = disc_hidden_units
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.use_prior = use_prior
        self.bn_momentum = bn_momentum
        self.output_norm = output_norm
        self.select_best = select_best
        self.random_state = random_state

    def _check_config(self, n):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.disc_steps < 1:
            raise ValueError(f"disc_steps must be >= 1, got {self.disc_steps}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if n < self.batch_size:
            raise ValueError(
                f"need at least batch_size={self.batch_size} pairs, got {n}"
            )
        if self.distance not in DISTANCES:
            raise ValueError(f"distance must be one of {DISTANCES}, got {self.distance!r}")

    def fit(self, X, Y, validation_data=None):
        """Train generators and discriminator on paired samples X, Y."""
        X, Y = as_paired_matrices(X, Y)
        n = X.shape[0]
        self._check_config(n)
        seeds = np.random.SeedSequence(self.random_state).spawn(5)
        rng_gx, rng_gy, rng_disc = (np.random.default_rng(s) for s in seeds[:3])
        prior_seed, rng_shuffle = seeds[3], np.random.default_rng(seeds[4])

        gx = make_generator(X.shape[1], self.hidden_units, self.n_components,
                            self.activation, self.bn_momentum, rng_gx, self.output_norm)
        gy = make_generator(Y.shape[1], self.hidden_units, self.n_components,
                            self.activation, self.bn_momentum, rng_gy, self.output_norm)
        disc = make_discriminator(self.n_components, self.disc_hidden_units, rng_disc)
        prior = GaussianPrior(self.n_components, prior_seed) if self.use_prior else None

        opt_gen = Adam(gx.params() + gy.params(), self.learning_rate, self.beta1,
                       weight_decay=self.weight_decay)
        opt_disc = Adam(disc.params(), self.learning_rate, self.beta1,
                        weight_decay=self.weight_decay)

        if validation_data is not None:
            xv, yv = as_paired_matrices(*validation_data, "X_valid", "Y_valid")
            if xv.shape[1] != X.shape[1] or yv.shape[1] != Y.shape[1]:
                raise ValueError("validation data widths do not match training data")

        disc_stream = _BatchStream(n, self.batch_size, rng_shuffle)
        gen_stream = _BatchStream(n, self.batch_size, rng_shuffle)
        iters_per_epoch = n // self.batch_size

        history = {k: [] for k in ("disc_loss", "pairing_loss", "gen_adv_loss",
                                   "disc_accuracy")}
        if validation_data is not None:
            history["val_pairing_loss"] = []
            history["val_objective"] = []
        best = None

        for epoch in range(self.n_epochs):
            sums = {k: 0.0 for k in ("disc_loss", "pairing_loss", "gen_adv_loss",
                                     "disc_accuracy")}
            for it in range(iters_per_epoch):
                for _ in range(self.disc_steps):
                    idx = disc_stream.next()
                    d_out = _discriminator_update(gx, gy, disc, opt_disc,
                                                  X[idx], Y[idx], prior)
                idx = gen_stream.next()
                g_out = _generator_update(gx, gy, disc, opt_gen, X[idx], Y[idx],
                                          prior, self.lam, self.distance)
                parts = {
                    "disc_loss": d_out["disc_loss"],
                    "pairing_loss": g_out["pairing_loss"],
                    "gen_adv_loss": g_out["gen_adv_loss"],
                    "disc_accuracy": d_out["accuracy"],
                }
                if not all(np.isfinite(v) for v in parts.values()):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, iteration {it}: {parts}"
                    )
                for k, v in parts.items():
                    sums[k] += v
            for k in sums:
                history[k].append(sums[k] / iters_per_epoch)
            if validation_data is not None:
                val = self._validation_objective(gx, gy, disc, prior_seed, xv, yv)
                history["val_pairing_loss"].append(val[0])
                history["val_objective"].append(val[1])
                if self.select_best and (best is None or val[1] < best[0]):
                    best = (val[1], copy.deepcopy(gx), copy.deepcopy(gy))

        if best is not None:
            _, gx, gy = best
        self.generator_x_ = gx
        self.generator_y_ = gy
        self.discriminator_ = disc
        self.prior_ = prior
        self.history_ = {k: np.asarray(v) for k, v in history.items()}
        self.n_features_x_ = X.shape[1]
        self.n_features_y_ = Y.shape[1]
        return self

    def _validation_objective(self, gx, gy, disc, prior_seed, xv, yv):
        """Pairing + adversarial objective on held-out pairs, in eval mode."""
        fx = gx.forward(xv, train=False)
        fy = gy.forward(yv, train=False)
        z = None
        if self.use_prior:
            z = GaussianPrior(self.n_components, prior_seed).sample(xv.shape[0])
        j, _ = pairing_loss(fx, fy, self.distance)
        out = _adversarial_pass(disc, fx, fy, z, train=False, backward=False)
        return j, j + self.lam * out["gen_adv_loss"]

    def _require_fitted(self):
        if not hasattr(self, "generator_x_"):
            raise NotFittedError("this Demian instance is not fitted yet; call fit first")

    def transform(self, X=None, Y=None):
        """Embed one or both modalities (eval mode, running BatchNorm stats).

        Returns the single embedding array when one modality is given, else
        the tuple ``(fx, fy)``.
        """
        self._require_fitted()
        if X is None and Y is None:
            raise ValueError("provide at least one modality to transform")
        fx = fy = None
        if X is not None:
            X = np.asarray(X, dtype=np.float64)
            fx = self.generator_x_.forward(X, train=False)
        if Y is not None:
            Y = np.asarray(Y, dtype=np.float64)
            fy = self.generator_y_.forward(Y, train=False)
        if fy is None:
            return fx
        if fx is None:
            return fy
        return fx, fy

    def fit_transform(self, X, Y, **fit_params):
        return self.fit(X, Y, **fit_params).transform(X, Y)

    def embed(self, X=None, Y=None, split_tag=""):
        """Like transform, but wrapped in an :class:`EmbeddingSet` with provenance."""
        fx = self.transform(X=X) if X is not None else None
        fy = self.transform(Y=Y) if Y is not None else None
        return EmbeddingSet(x=fx, y=fy, split_tag=split_tag, source="demian",
                            meta={"n_components": self.n_components})
