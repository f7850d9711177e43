from dataclasses import dataclass, asdict

from hsc_toolbox.constants import (
    SIGMA_GM, LAMBDA_POSE, LAMBDA_BEND, LAMBDA_SHAPE, LAMBDA_BONE,
    LAMBDA_SM_BODY, LAMBDA_SM_HAND, BEND_KAPPA, WINDOW, MAX_ITERATIONS,
    TOLERANCE
)
from hsc_toolbox.exceptions import ConfigException

# accepted for forward compatibility, the terms are not implemented
RESERVED_KEYS = ('lambda_collision', 'lambda_expression')


@dataclass
class EnergyConfig:
    """Weights and solver settings of the fitting objectives.

    sigma_gm is in pixels, window in frames. With `robust` off the
    Geman-McClure robustifier is replaced by a plain squared loss.
    """
    sigma_gm: float = SIGMA_GM
    lambda_pose: float = LAMBDA_POSE
    lambda_bend: float = LAMBDA_BEND
    lambda_shape: float = LAMBDA_SHAPE
    lambda_bone: float = LAMBDA_BONE
    lambda_sm_body: float = LAMBDA_SM_BODY
    lambda_sm_hand: float = LAMBDA_SM_HAND
    bend_kappa: float = BEND_KAPPA
    window: int = WINDOW
    max_iterations: int = MAX_ITERATIONS
    tolerance: float = TOLERANCE
    robust: bool = True

    def validate(self):
        if not self.sigma_gm > 0:
            raise ConfigException('sigma_gm', 'must be positive')
        for key in ('lambda_pose', 'lambda_bend', 'lambda_shape',
                    'lambda_bone', 'lambda_sm_body', 'lambda_sm_hand',
                    'bend_kappa', 'tolerance'):
            if getattr(self, key) < 0:
                raise ConfigException(key, 'must be non-negative')
        if self.window < 1:
            raise ConfigException('window', 'must be at least 1')
        if self.max_iterations < 1:
            raise ConfigException('max_iterations', 'must be at least 1')
        return self

    def replace(self, **changes):
        d = self.to_dict()
        d.update(changes)
        return EnergyConfig(**d).validate()

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d, prefix='energy'):
        d = dict(d)
        for key in RESERVED_KEYS:
            if key in d:
                if d.pop(key) != 0:
                    raise ConfigException('{}.{}'.format(prefix, key),
                                          'reserved term must be 0')
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigException('{}.{}'.format(prefix, unknown[0]))
        return cls(**d).validate()
