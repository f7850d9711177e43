import logging

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from hsc_toolbox.constants import MAX_ITERATIONS, TOLERANCE

logger = logging.getLogger(__name__)

INITIAL_DAMPING = 1e-3
MIN_DAMPING = 1e-12
MAX_DAMPING = 1e12
DAMPING_DOWN = 3.0
DAMPING_UP = 4.0
# keeps the damped system regular for parameters with zero curvature
IDENTITY_DAMPING = 1e-9


@dataclass
class SolveResult:
    x: np.ndarray
    energy: float
    initial_energy: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _solve(jtj, rhs):
    if sparse.issparse(jtj):
        return spsolve(jtj.tocsc(), rhs)
    return np.linalg.solve(jtj, rhs)


def levenberg_marquardt(fun, x0, max_iterations=MAX_ITERATIONS,
                        tolerance=TOLERANCE):
    """Damped Gauss-Newton on the least squares energy |r(x)|^2.

    Steps are only accepted when they do not increase the energy; a rejected
    step raises the damping and is retried, which backtracks the step towards
    the scaled gradient direction.

    Parameters
    ----------
    fun: callable
        x -> (r, J) with J dense or scipy.sparse, or (r, None) when called
        with with_jacobian=False
    x0: np.ndarray
    max_iterations: int
    tolerance: float
        stop when the relative energy decrease of an accepted step is below
        it

    Returns
    -------
    SolveResult
    """
    x = np.array(x0, dtype=np.float64)
    r, jac = fun(x, with_jacobian=True)
    energy = float(r @ r)
    initial = energy
    history = [energy]
    damping = INITIAL_DAMPING
    converged = False
    iteration = 0

    while iteration < max_iterations:
        iteration += 1
        gradient = jac.T @ r
        jtj = jac.T @ jac
        if sparse.issparse(jtj):
            diagonal = jtj.diagonal()
        else:
            diagonal = np.diag(jtj).copy()

        accepted = False
        while damping <= MAX_DAMPING:
            scaling = damping * (diagonal + IDENTITY_DAMPING)
            if sparse.issparse(jtj):
                system = jtj + sparse.diags(scaling)
            else:
                system = jtj + np.diag(scaling)
            step = _solve(system, -gradient)
            candidate = x + step
            r_new, _ = fun(candidate, with_jacobian=False)
            energy_new = float(r_new @ r_new)
            if np.isfinite(energy_new) and energy_new <= energy:
                accepted = True
                break
            damping *= DAMPING_UP

        if not accepted:
            logger.debug("No descent step after {} iterations".format(
                iteration))
            converged = True
            break

        decrease = (energy - energy_new) / max(energy, np.finfo(float).tiny)
        x = candidate
        energy = energy_new
        history.append(energy)
        damping = max(damping / DAMPING_DOWN, MIN_DAMPING)
        if decrease < tolerance:
            converged = True
            break
        r, jac = fun(x, with_jacobian=True)

    logger.debug("LM finished after {} iterations, energy {} -> {}".format(
        iteration, initial, energy))
    return SolveResult(x=x, energy=energy, initial_energy=initial,
                       iterations=iteration, converged=converged,
                       history=history)
