"""Shared per-vertex perceptron predicting contact probabilities.

Every vertex is classified by the same two layer network from its own
feature row. Inputs are standardized with training statistics and masked
rows are zeroed after standardization. Each vertex also gets the mean of
its unmasked mesh neighbors' rows when it is masked (zeros otherwise) and
the mask flag as one more input.
"""

import logging

from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from hsc_toolbox.constants import (
    HIDDEN_UNITS, EPOCHS, MASK_FRACTION, PROBABILITY_CLAMP, SEED,
    TRAINING_TOLERANCE
)
from hsc_toolbox.exceptions import (
    ConfigException, DatasetException, DimensionMismatch
)
from hsc_toolbox.contact.labels import ContactVector
from hsc_toolbox.predictor.features import mvm_mask, neighbor_fill
from hsc_toolbox.pipeline.fileio import write_json, read_json

logger = logging.getLogger(__name__)

PARAMETERS = ('W1', 'b1', 'w2', 'b2')


@dataclass
class ClassifierConfig:
    hidden_units: int = HIDDEN_UNITS
    epochs: int = EPOCHS
    mask_fraction: float = MASK_FRACTION
    tolerance: float = TRAINING_TOLERANCE
    seed: int = SEED

    def validate(self):
        if self.hidden_units < 1:
            raise ConfigException('hidden_units', 'must be at least 1')
        if self.epochs < 1:
            raise ConfigException('epochs', 'must be at least 1')
        if not 0 <= self.mask_fraction < 1:
            raise ConfigException('mask_fraction', 'must be in [0, 1)')
        if not self.tolerance >= 0:
            raise ConfigException('tolerance', 'must not be negative')
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d, prefix='predictor'):
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigException('{}.{}'.format(prefix, unknown[0]))
        return cls(**d).validate()


def bce_loss(p, c, clamp=PROBABILITY_CLAMP):
    """Mean binary cross entropy of probabilities p against labels c.

    Parameters
    ----------
    p: array-like
        (V,) probabilities, clamped to [clamp, 1 - clamp]
    c: ContactVector or array-like
        (V,) labels in {0, 1}
    """
    labels = c.labels if isinstance(c, ContactVector) else c
    labels = np.asarray(labels, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != labels.shape:
        raise DimensionMismatch('probabilities', labels.shape, p.shape)
    p = np.clip(p, clamp, 1.0 - clamp)
    return float(-np.mean(labels * np.log(p)
                          + (1.0 - labels) * np.log(1.0 - p)))


def input_dim(feature_dim):
    """Own row, neighbor fill and mask flag."""
    return 2 * feature_dim + 1


class Classifier:

    def __init__(self, W1, b1, w2, b2, mean, std, seed=SEED):
        self.W1 = np.asarray(W1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = float(b2)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        self.seed = seed
        self.history = []
        expected = (input_dim(len(self.mean)), len(self.b1))
        if self.W1.shape != expected:
            raise DimensionMismatch('W1', expected, self.W1.shape)
        if self.w2.shape != self.b1.shape:
            raise DimensionMismatch('w2', self.b1.shape, self.w2.shape)

    @classmethod
    def initialize(cls, mean, std, hidden_units, seed):
        rng = np.random.default_rng(seed)
        n_in = input_dim(len(mean))
        return cls(rng.normal(0.0, 1.0 / np.sqrt(n_in),
                              (n_in, hidden_units)),
                   np.zeros(hidden_units),
                   rng.normal(0.0, 1.0 / np.sqrt(hidden_units),
                              hidden_units),
                   0.0, mean, std, seed)

    @property
    def dims(self):
        return [len(self.mean), len(self.b1)]

    def inputs(self, features):
        if features.dim != len(self.mean):
            raise DimensionMismatch('features', len(self.mean), features.dim)
        x = (features.values - self.mean) / self.std
        x[features.mask] = 0.0
        return np.concatenate([x, neighbor_fill(x, features),
                               features.mask[:, None].astype(float)],
                              axis=1)

    def _forward(self, x):
        hidden = np.tanh(x @ self.W1 + self.b1)
        return hidden, hidden @ self.w2 + self.b2

    def probabilities(self, features):
        return expit(self._forward(self.inputs(features))[1])

    def weighted_loss_and_gradients(self, x, labels, weights):
        """Weighted binary cross entropy of input rows x, computed from the
        logits, and its gradient for every parameter."""
        hidden, logits = self._forward(x)
        loss = float(weights @ (np.logaddexp(0.0, logits) - labels * logits))
        g = weights * (expit(logits) - labels)
        d_pre = np.outer(g, self.w2) * (1.0 - hidden ** 2)
        gradients = {'W1': x.T @ d_pre,
                     'b1': d_pre.sum(axis=0),
                     'w2': hidden.T @ g,
                     'b2': float(g.sum())}
        return loss, gradients

    def loss_and_gradients(self, features, targets):
        """Mean binary cross entropy of one body and its gradients."""
        labels = np.asarray(targets.labels, dtype=np.float64)
        if len(labels) != features.n_vertices:
            raise DimensionMismatch('labels', features.n_vertices,
                                    len(labels))
        return self.weighted_loss_and_gradients(
            self.inputs(features), labels,
            np.full(len(labels), 1.0 / len(labels)))

    def parameters(self):
        return np.concatenate([self.W1.ravel(), self.b1, self.w2,
                               [self.b2]])

    def set_parameters(self, theta):
        n_in, hidden = self.W1.shape
        self.W1 = theta[:n_in * hidden].reshape(n_in, hidden).copy()
        self.b1 = theta[n_in * hidden:(n_in + 1) * hidden].copy()
        self.w2 = theta[(n_in + 1) * hidden:-1].copy()
        self.b2 = float(theta[-1])

    @staticmethod
    def flatten(gradients):
        return np.concatenate([np.ravel(gradients[name])
                               for name in PARAMETERS])

    def to_dict(self):
        return {'dims': self.dims,
                'W1': self.W1.tolist(), 'b1': self.b1.tolist(),
                'w2': self.w2.tolist(), 'b2': self.b2,
                'mean': self.mean.tolist(), 'std': self.std.tolist(),
                'seed': self.seed}

    @classmethod
    def from_dict(cls, d):
        clf = cls(d['W1'], d['b1'], d['w2'], d['b2'], d['mean'], d['std'],
                  d.get('seed', SEED))
        if clf.dims != list(d['dims']):
            raise DimensionMismatch('dims', d['dims'], clf.dims)
        return clf


def _feature_statistics(dataset):
    rows = np.concatenate([f.values[~f.mask] for f, _ in dataset])
    if not len(rows):
        raise DatasetException('every training vertex is masked')
    std = rows.std(axis=0)
    std[std < 1e-12] = 1.0
    return rows.mean(axis=0), std


def _training_rows(clf, bodies):
    x = np.concatenate([clf.inputs(f) for f, _ in bodies])
    labels = np.concatenate([np.asarray(c.labels, dtype=np.float64)
                             for _, c in bodies])
    # every body weighs the same whatever its vertex count
    weights = np.concatenate([np.full(f.n_vertices, 1.0 / f.n_vertices)
                              for f, _ in bodies]) / len(bodies)
    return x, labels, weights


def train_classifier(dataset, cfg=None):
    """Full-batch quasi-Newton descent on the mean binary cross entropy.

    With a positive mask fraction every body is joined by one masked copy
    of its features whose vertices all stay supervised. One epoch is one
    L-BFGS iteration; its line search only accepts steps that lower the
    loss, so the per-epoch training loss kept in `Classifier.history` never
    increases. Training stops early once an epoch lowers the loss by less
    than `cfg.tolerance` (relative).

    Parameters
    ----------
    dataset: list of (VertexFeatures, ContactVector)
    cfg: ClassifierConfig

    Returns
    -------
    Classifier
    """
    cfg = (cfg or ClassifierConfig()).validate()
    if not dataset:
        raise DatasetException('empty dataset')
    dims = set(f.dim for f, _ in dataset)
    if len(dims) != 1:
        raise DimensionMismatch('features', sorted(dims)[0],
                                sorted(dims)[-1])
    for features, targets in dataset:
        if features.n_vertices != len(targets):
            raise DimensionMismatch('labels', features.n_vertices,
                                    len(targets))

    mean, std = _feature_statistics(dataset)
    clf = Classifier.initialize(mean, std, cfg.hidden_units, cfg.seed)
    bodies = list(dataset)
    if cfg.mask_fraction > 0:
        rng = np.random.default_rng(cfg.seed + 1)
        bodies += [(mvm_mask(f, cfg.mask_fraction,
                             int(rng.integers(2 ** 31))), c)
                   for f, c in dataset]
    x, labels, weights = _training_rows(clf, bodies)
    last = {}

    def objective(theta):
        clf.set_parameters(theta)
        loss, gradients = clf.weighted_loss_and_gradients(x, labels,
                                                          weights)
        last['theta'], last['loss'] = theta.copy(), loss
        return loss, Classifier.flatten(gradients)

    def end_of_epoch(theta):
        if not np.array_equal(theta, last.get('theta')):
            objective(theta)
        clf.history.append(last['loss'])
        epoch = len(clf.history) - 1
        if epoch % 50 == 0:
            logger.debug("Epoch {}: training loss {:.6f}".format(
                epoch, clf.history[-1]))

    result = minimize(objective, clf.parameters(), jac=True,
                      method='L-BFGS-B', callback=end_of_epoch,
                      options={'maxiter': cfg.epochs, 'ftol': cfg.tolerance,
                               'gtol': cfg.tolerance})
    clf.set_parameters(result.x)
    if not clf.history:
        clf.history.append(float(result.fun))
    logger.info("Trained classifier on {} bodies ({} rows) in {} epochs, "
                "final loss {:.6f}: {}".format(
                    len(dataset), len(x), len(clf.history), clf.history[-1],
                    result.message))
    return clf


def predict(clf, features, topology, frame=None):
    """Contact probabilities and labels thresholded at 0.5."""
    return ContactVector.from_probabilities(clf.probabilities(features),
                                            topology, frame=frame)


def save_classifier(clf, path):
    write_json(path, clf.to_dict())


def load_classifier(path):
    return Classifier.from_dict(read_json(path))
