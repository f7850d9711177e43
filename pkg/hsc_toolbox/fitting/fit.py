"""Per-frame multiview fitting and windowed batch refinement."""

import logging

from dataclasses import dataclass, field

import numpy as np

from hsc_toolbox.constants import CONSENSUS_TAU
from hsc_toolbox.exceptions import FittingException, DimensionMismatch
from hsc_toolbox.body_model.model import (
    BodyParams, pack_free_parameters, unpack_free_parameters,
    free_parameter_count
)
from hsc_toolbox.camera.triangulation import consensus_weights
from hsc_toolbox.fitting.config import EnergyConfig
from hsc_toolbox.fitting.energy import (
    FrameObjective, BatchObjective, total_energy, BATCH_TERMS
)
from hsc_toolbox.fitting.optimizer import levenberg_marquardt

logger = logging.getLogger(__name__)


@dataclass
class FitResult:
    """Fitted parameters of consecutive frames.

    energies[i] maps every term of the batch energy to its unweighted value
    for frame i, plus the weighted 'total'.
    """
    params: list
    energies: list
    weights: list
    converged: list
    frames: list = field(default_factory=list)

    def __post_init__(self):
        if not self.frames:
            self.frames = list(range(len(self.params)))

    def __len__(self):
        return len(self.params)

    @property
    def total_energy(self):
        return float(sum(e['total'] for e in self.energies))

    def frame(self, i):
        """Single-frame FitResult of the i-th entry."""
        return FitResult([self.params[i]], [self.energies[i]],
                         [self.weights[i]], [self.converged[i]],
                         [self.frames[i]])

    @classmethod
    def concatenate(cls, results):
        merged = cls([], [], [], [], [])
        for r in results:
            merged.params += r.params
            merged.energies += r.energies
            merged.weights += r.weights
            merged.converged += r.converged
            merged.frames += r.frames
        return merged


def _breakdown(terms, cfg):
    energies = dict.fromkeys(BATCH_TERMS, 0.0)
    energies.update(terms)
    energies['total'] = total_energy(
        {k: energies[k] for k in BATCH_TERMS}, cfg)
    return energies


def _normalized(model, params):
    params = params.copy()
    params.validate(model)
    if len(params.hand_pose) != model.n_hand:
        params.hand_pose = np.zeros(model.n_hand)
    return params


def stage_columns(model, stage):
    """Free entries of [translation, pose, hand_pose] in a fitting stage.

    Stage 1 frees the translation and the global orientation, stage 2 every
    entry except the raw pose of the hand joints, which is driven through
    the hand pose basis.
    """
    if stage == 1:
        return np.arange(6)
    columns = np.ones(free_parameter_count(model), dtype=bool)
    if model.has_hands:
        for k in model.hand_joints:
            columns[3 + 3 * k:6 + 3 * k] = False
    return np.flatnonzero(columns)


def _restricted(residuals, x_full, columns):
    """Residual function of a subset of the entries of x_full."""

    def fun(x, with_jacobian=True):
        full = x_full.copy()
        full[columns] = x
        r, jac = residuals(full, with_jacobian)
        if not with_jacobian:
            return r, None
        return r, jac[:, columns]

    return fun


def _minimize(residuals, x_full, columns, cfg):
    fun = _restricted(residuals, x_full, columns)
    solution = levenberg_marquardt(fun, x_full[columns],
                                   max_iterations=cfg.max_iterations,
                                   tolerance=cfg.tolerance)
    history = solution.history
    if any(b > a for a, b in zip(history, history[1:])):
        raise FittingException('energy increased during the solve')
    x = x_full.copy()
    x[columns] = solution.x
    return x, solution


def fit_frame(model, cams, keypoints, init, cfg=None, weights=None,
              tau=CONSENSUS_TAU):
    """Minimize the multiview energy of one frame.

    Parameters
    ----------
    model: BodyModel
    cams: list of Camera
        ordered like keypoints.camera_names
    keypoints: KeypointSet
    init: BodyParams
        shape is taken from it and held fixed
    cfg: EnergyConfig
    weights: ConsensusWeights
        computed from the detections when not given
    tau: float
        consensus temperature in pixels

    Returns
    -------
    FitResult
    """
    cfg = cfg or EnergyConfig()
    if keypoints.n_joints != model.n_joints:
        raise DimensionMismatch('keypoints', model.n_joints,
                                keypoints.n_joints)
    if not keypoints.any_observed():
        raise FittingException('no observations')
    if weights is None:
        weights = consensus_weights(cams, keypoints, tau)
    params = _normalized(model, init)
    objective = FrameObjective(model, cams, keypoints, weights, cfg)

    def residuals(x, with_jacobian=True):
        return objective.residuals(
            unpack_free_parameters(model, x, params.shape), with_jacobian)

    x = pack_free_parameters(params)
    converged = True
    for stage in (1, 2):
        x, solution = _minimize(residuals, x, stage_columns(model, stage),
                                cfg)
        converged = converged and solution.converged
        logger.debug("Stage {}: energy {:.6g} -> {:.6g} in {} "
                     "iterations".format(stage, solution.initial_energy,
                                         solution.energy,
                                         solution.iterations))

    fitted = unpack_free_parameters(model, x, params.shape)
    energies = _breakdown(objective.terms(fitted), cfg)
    if not np.isfinite(energies['total']):
        raise FittingException('non-finite energy')
    return FitResult([fitted], [energies],
                     [weights.for_cameras(keypoints.camera_names)],
                     [converged])


def _fit_window(model, cams, keypoints_list, inits, cfg, weights_list):
    singles = [fit_frame(model, cams, k, init, cfg, weights=w)
               for k, init, w in zip(keypoints_list, inits, weights_list)]
    weights_list = [s.weights[0] for s in singles]
    objectives = [FrameObjective(model, cams, k, w, cfg)
                  for k, w in zip(keypoints_list, weights_list)]
    batch = BatchObjective(objectives, cfg)
    shape = inits[0].shape
    n_params = free_parameter_count(model)
    n = len(keypoints_list)

    def split(x):
        return [unpack_free_parameters(model, x[t * n_params:
                                                (t + 1) * n_params], shape)
                for t in range(n)]

    def residuals(x, with_jacobian=True):
        r, jac = batch.residuals(split(x), with_jacobian)
        if with_jacobian:
            jac = jac.tocsc()
        return r, jac

    starts = [[_normalized(model, p) for p in inits],
              [s.params[0] for s in singles]]
    energies = [batch.energy(s) for s in starts]
    start = starts[int(np.argmin(energies))]
    logger.debug("Batch of {} frames starts at energy {:.6g} (initial "
                 "{:.6g})".format(n, min(energies), energies[0]))

    x = np.concatenate([pack_free_parameters(p) for p in start])
    columns = stage_columns(model, 2)
    columns = np.concatenate([t * n_params + columns for t in range(n)])
    x, solution = _minimize(residuals, x, columns, cfg)
    logger.debug("Batch energy {:.6g} -> {:.6g} in {} iterations".format(
        solution.initial_energy, solution.energy, solution.iterations))

    fitted = split(x)
    energies = [_breakdown(terms, cfg)
                for terms in batch.frame_terms(fitted)]
    return FitResult(fitted, energies, weights_list,
                     [solution.converged] * n)


def fit_batch(model, cams, keypoints_list, inits, cfg=None,
              weights_list=None):
    """Refine consecutive frames jointly with temporal smoothness.

    Frames are processed in consecutive windows of cfg.window frames; each
    window is first fitted frame by frame and then minimized as a whole,
    starting from whichever of the given and the per-frame solutions has
    the lower batch energy.

    Parameters
    ----------
    model: BodyModel
    cams: list of Camera
    keypoints_list: list of KeypointSet
    inits: list of BodyParams
    cfg: EnergyConfig
    weights_list: list of ConsensusWeights, optional

    Returns
    -------
    FitResult
    """
    cfg = cfg or EnergyConfig()
    if len(keypoints_list) != len(inits):
        raise DimensionMismatch('inits', len(keypoints_list), len(inits))
    if not keypoints_list:
        raise FittingException('no frames to fit')
    if weights_list is None:
        weights_list = [None] * len(keypoints_list)
    if len(keypoints_list) == 1:
        return fit_frame(model, cams, keypoints_list[0], inits[0], cfg,
                         weights=weights_list[0])

    results = []
    for begin in range(0, len(keypoints_list), cfg.window):
        end = begin + cfg.window
        if len(keypoints_list[begin:end]) == 1:
            window = fit_frame(model, cams, keypoints_list[begin],
                               inits[begin], cfg,
                               weights=weights_list[begin])
        else:
            window = _fit_window(model, cams, keypoints_list[begin:end],
                                 inits[begin:end], cfg,
                                 weights_list[begin:end])
        window.frames = list(range(begin, begin + len(window)))
        results.append(window)
    return FitResult.concatenate(results)


def initial_params(model, shape=None):
    """Mean pose starting point with the given (fixed) body shape."""
    params = BodyParams.zeros(model)
    if shape is not None:
        params.shape = np.asarray(shape, dtype=np.float64).copy()
    return params
