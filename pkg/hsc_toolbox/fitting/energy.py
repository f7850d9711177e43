"""Fitting objectives as stacked least squares residuals.

Every energy is the squared norm of a residual vector, so that the same
residuals drive the Levenberg-Marquardt solver and the reported energy
breakdown.
"""

import logging

import numpy as np
from scipy import sparse

from hsc_toolbox.constants import BEND_JOINTS
from hsc_toolbox.exceptions import CameraException
from hsc_toolbox.body_model.model import (
    joints_and_jacobian, free_parameter_count
)
from hsc_toolbox.fitting.robust import gm_residuals, squared_residuals

logger = logging.getLogger(__name__)

FRAME_TERMS = ('joints', 'bones', 'pose', 'bend', 'shape')
BATCH_TERMS = FRAME_TERMS + ('smooth_body', 'smooth_hand')


def term_weights(cfg):
    return {'joints': 1.0,
            'bones': cfg.lambda_bone,
            'pose': cfg.lambda_pose,
            'bend': cfg.lambda_bend,
            'shape': cfg.lambda_shape,
            'smooth_body': cfg.lambda_sm_body,
            'smooth_hand': cfg.lambda_sm_hand}


def total_energy(terms, cfg):
    weights = term_weights(cfg)
    return float(sum(weights[k] * v for k, v in terms.items()))


def _bend_joints(model):
    """(joint index, axis, sign) for the bending joints the model has."""
    return [(model.joint_index(name), axis, sign)
            for name, (axis, sign) in sorted(BEND_JOINTS.items())
            if name in model.joint_names]


def bend_residuals(model, pose, kappa):
    """One-sided bend penalty exp(kappa * max(0, -flexion)) - 1 per joint
    and its derivative with respect to the flexion coordinate."""
    residuals, columns, derivatives = [], [], []
    for k, axis, sign in _bend_joints(model):
        flexion = sign * pose[3 * k + axis]
        over = max(0.0, -flexion)
        value = np.exp(kappa * over)
        residuals.append(value - 1.0)
        columns.append(3 * k + axis)
        derivatives.append(-kappa * value * sign if flexion < 0 else 0.0)
    return np.array(residuals), np.array(columns, dtype=np.int64), \
        np.array(derivatives)


def prior_terms(model, params, cfg):
    """Unweighted prior energies: body pose, bend and shape."""
    bend, _, _ = bend_residuals(model, params.pose, cfg.bend_kappa)
    return {'pose': float(np.sum(params.pose[3:] ** 2)),
            'bend': float(np.sum(bend ** 2)),
            'shape': float(np.sum(params.shape ** 2))}


def energy_priors(model, params, cfg):
    """lambda_pose |theta_body|^2 + lambda_bend E_bend + lambda_shape
    |beta|^2."""
    terms = prior_terms(model, params, cfg)
    return (cfg.lambda_pose * terms['pose']
            + cfg.lambda_bend * terms['bend']
            + cfg.lambda_shape * terms['shape'])


class FrameObjective:
    """Multiview energy of one frame, Sum_c E_J^c + Sum_c E_O^c + E_reg."""

    def __init__(self, model, cams, keypoints, weights, cfg):
        """
        Parameters
        ----------
        model: BodyModel
        cams: list of Camera
            ordered like keypoints.camera_names
        keypoints: KeypointSet
        weights: ConsensusWeights
        cfg: EnergyConfig
        """
        if len(cams) != keypoints.n_views:
            raise CameraException('{} cameras for {} views'.format(
                len(cams), keypoints.n_views))
        if keypoints.n_joints != model.n_joints:
            raise ValueError('keypoints have {} joints, model has {}'.format(
                keypoints.n_joints, model.n_joints))
        self.model = model
        self.cams = cams
        self.keypoints = keypoints
        self.weights = weights.for_cameras(keypoints.camera_names)
        self.cfg = cfg
        self.n_params = free_parameter_count(model)
        self.bones = np.array(model.bones(), dtype=np.int64).reshape(-1, 2)

    def _robust(self, e):
        if self.cfg.robust:
            return gm_residuals(e, self.cfg.sigma_gm)
        return squared_residuals(e)

    def _behind(self, count):
        """Residuals of terms whose joints are behind the camera; their
        energy is the bounded maximum sigma^2."""
        out = np.zeros((count, 2))
        out[:, 0] = self.cfg.sigma_gm
        return out

    def _view_terms(self, joints, d_joints, with_jacobian):
        """Joint and bone residual blocks of every view."""
        gamma = self.keypoints.confidence
        w = self.weights.weights
        x = self.keypoints.uv
        joint_r, joint_j, bone_r, bone_j = [], [], [], []
        parent, child = self.bones[:, 0], self.bones[:, 1]
        for c, cam in enumerate(self.cams):
            uv, d_proj, depth = cam.project_with_jacobian(joints)
            d_pixels = d_proj @ d_joints if with_jacobian else None

            idx = np.flatnonzero(gamma[c] > 0)
            scale = np.sqrt(gamma[c, idx] * w[c, idx])
            g, dg = self._robust(uv[idx] - x[c, idx])
            front = depth[idx] > 0
            g[~front] = self._behind(np.count_nonzero(~front))
            joint_r.append((scale[:, None] * g).ravel())
            if with_jacobian:
                jac = scale[:, None, None] * (dg @ d_pixels[idx])
                jac[~front] = 0.0
                joint_j.append(jac.reshape(-1, self.n_params))

            valid = (gamma[c, parent] > 0) & (gamma[c, child] > 0)
            p, ch = parent[valid], child[valid]
            scale = np.sqrt(gamma[c, p] * gamma[c, ch] * w[c, p] * w[c, ch])
            e = (uv[ch] - uv[p]) - (x[c, ch] - x[c, p])
            g, dg = self._robust(e)
            front = (depth[p] > 0) & (depth[ch] > 0)
            g[~front] = self._behind(np.count_nonzero(~front))
            bone_r.append((scale[:, None] * g).ravel())
            if with_jacobian:
                jac = scale[:, None, None] * (
                    dg @ (d_pixels[ch] - d_pixels[p]))
                jac[~front] = 0.0
                bone_j.append(jac.reshape(-1, self.n_params))
        return joint_r, joint_j, bone_r, bone_j

    def residual_blocks(self, params, with_jacobian=True):
        """Unweighted residual blocks per term.

        Returns
        -------
        dict
            term -> (residuals, jacobian or None); the jacobian is taken with
            respect to [translation, pose, hand_pose]
        """
        joints, d_joints = joints_and_jacobian(self.model, params)
        joint_r, joint_j, bone_r, bone_j = self._view_terms(
            joints, d_joints, with_jacobian)
        blocks = {
            'joints': (np.concatenate(joint_r),
                       np.concatenate(joint_j) if with_jacobian else None),
            'bones': (np.concatenate(bone_r),
                      np.concatenate(bone_j) if with_jacobian else None),
        }

        pose_r = params.pose[3:]
        pose_j = None
        if with_jacobian:
            pose_j = np.zeros((len(pose_r), self.n_params))
            pose_j[np.arange(len(pose_r)), 6 + np.arange(len(pose_r))] = 1.0
        blocks['pose'] = (pose_r, pose_j)

        bend_r, columns, derivatives = bend_residuals(
            self.model, params.pose, self.cfg.bend_kappa)
        bend_j = None
        if with_jacobian:
            bend_j = np.zeros((len(bend_r), self.n_params))
            bend_j[np.arange(len(bend_r)), 3 + columns] = derivatives
        blocks['bend'] = (bend_r, bend_j)

        # shape is fixed while fitting, a constant term
        blocks['shape'] = (params.shape.copy(),
                           np.zeros((len(params.shape), self.n_params))
                           if with_jacobian else None)
        return blocks

    def terms(self, params):
        blocks = self.residual_blocks(params, with_jacobian=False)
        return {k: float(np.sum(r ** 2)) for k, (r, _) in blocks.items()}

    def energy(self, params):
        return total_energy(self.terms(params), self.cfg)

    def residuals(self, params, with_jacobian=True):
        """Weighted stacked residuals r with energy = r . r."""
        blocks = self.residual_blocks(params, with_jacobian)
        weights = term_weights(self.cfg)
        r = np.concatenate([np.sqrt(weights[k]) * blocks[k][0]
                            for k in FRAME_TERMS])
        if not with_jacobian:
            return r, None
        jac = np.concatenate([np.sqrt(weights[k]) * blocks[k][1]
                              for k in FRAME_TERMS])
        return r, jac


class BatchObjective:
    """E_batch over a window: the frame energies plus temporal smoothness of
    the 3D joints and of the hand pose."""

    def __init__(self, frame_objectives, cfg):
        self.frames = frame_objectives
        self.cfg = cfg
        self.model = frame_objectives[0].model
        self.n_params = free_parameter_count(self.model)

    def _place(self, blocks, n_frames):
        """Sparse row block holding dense (rows, n_params) blocks at the
        columns of the given frames."""
        n_rows = blocks[0][1].shape[0]
        rows, cols, vals = [], [], []
        for t, block in blocks:
            r, c = np.nonzero(block)
            rows.append(r)
            cols.append(t * self.n_params + c)
            vals.append(block[r, c])
        return sparse.csr_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_rows, n_frames * self.n_params))

    def _smoothness(self, params_list, with_jacobian):
        model = self.model
        n_joint_coords = 3 * model.n_joints
        body_r, hand_r = [], []
        body_j, hand_j = [], []
        posed = [joints_and_jacobian(model, p) for p in params_list]
        n = len(params_list)
        hand_cols = np.arange(3 + 3 * model.n_joints, self.n_params)
        for t in range(n - 1):
            (j0, d0), (j1, d1) = posed[t], posed[t + 1]
            body_r.append((j1 - j0).ravel())
            hand_r.append(params_list[t + 1].hand_pose
                          - params_list[t].hand_pose)
            if with_jacobian:
                body_j.append(self._place(
                    [(t, -d0.reshape(n_joint_coords, -1)),
                     (t + 1, d1.reshape(n_joint_coords, -1))], n))
                k = len(hand_cols)
                rows = np.tile(np.arange(k), 2)
                cols = np.concatenate([t * self.n_params + hand_cols,
                                       (t + 1) * self.n_params + hand_cols])
                vals = np.concatenate([-np.ones(k), np.ones(k)])
                hand_j.append(sparse.csr_matrix(
                    (vals, (rows, cols)), shape=(k, n * self.n_params)))
        return body_r, body_j, hand_r, hand_j

    def terms(self, params_list):
        totals = dict.fromkeys(BATCH_TERMS, 0.0)
        for objective, params in zip(self.frames, params_list):
            for k, v in objective.terms(params).items():
                totals[k] += v
        body_r, _, hand_r, _ = self._smoothness(params_list, False)
        totals['smooth_body'] = float(sum(np.sum(r ** 2) for r in body_r))
        totals['smooth_hand'] = float(sum(np.sum(r ** 2) for r in hand_r))
        return totals

    def energy(self, params_list):
        return total_energy(self.terms(params_list), self.cfg)

    def frame_terms(self, params_list):
        """Per-frame breakdown; the smoothness of the step t -> t+1 is
        booked on frame t, so the frame totals add up to the batch total."""
        body_r, _, hand_r, _ = self._smoothness(params_list, False)
        breakdown = []
        for t, (objective, params) in enumerate(zip(self.frames,
                                                    params_list)):
            terms = objective.terms(params)
            last = t == len(params_list) - 1
            terms['smooth_body'] = 0.0 if last else \
                float(np.sum(body_r[t] ** 2))
            terms['smooth_hand'] = 0.0 if last else \
                float(np.sum(hand_r[t] ** 2))
            breakdown.append(terms)
        return breakdown

    def residuals(self, params_list, with_jacobian=True):
        """Stacked residuals and a sparse Jacobian over all frames."""
        n = len(params_list)
        r_parts, j_parts = [], []
        for t, (objective, params) in enumerate(zip(self.frames,
                                                    params_list)):
            r, jac = objective.residuals(params, with_jacobian)
            r_parts.append(r)
            if with_jacobian:
                j_parts.append(self._place([(t, jac)], n))
        body_r, body_j, hand_r, hand_j = self._smoothness(params_list,
                                                          with_jacobian)
        s_body = np.sqrt(self.cfg.lambda_sm_body)
        s_hand = np.sqrt(self.cfg.lambda_sm_hand)
        r_parts += [s_body * r for r in body_r] + [s_hand * r for r in hand_r]
        r = np.concatenate(r_parts)
        if not with_jacobian:
            return r, None
        j_parts += [s_body * j for j in body_j] + [s_hand * j for j in hand_j]
        return r, sparse.vstack(j_parts).tocsr()


def energy_joints(model, params, cams, keypoints, weights, cfg):
    """Sum_c Sum_j gamma w rho(|project(joint_j) - x_cj|; sigma_gm)."""
    objective = FrameObjective(model, cams, keypoints, weights, cfg)
    return objective.terms(params)['joints']


def energy_bones(model, params, cams, keypoints, weights, cfg):
    """Sum_c Sum_bones gamma w rho(|b - b'|; sigma_gm) on 2D bone vectors."""
    objective = FrameObjective(model, cams, keypoints, weights, cfg)
    return objective.terms(params)['bones']
