import logging

from dataclasses import dataclass, field

from hsc_toolbox.constants import CONSENSUS_TAU, SEED
from hsc_toolbox.exceptions import ConfigException
from hsc_toolbox.contact.labels import ContactConfig
from hsc_toolbox.fitting.config import EnergyConfig
from hsc_toolbox.predictor.classifier import ClassifierConfig
from hsc_toolbox.pipeline.fileio import read_json, write_json

logger = logging.getLogger(__name__)

PATH_KEYS = ('dataset', 'model', 'fits', 'contacts', 'scores', 'export',
             'classifier')

# fixed offsets of the per-purpose random streams derived from the seed
SEED_OFFSETS = {
    'synth': 0,
    'noise': 1,
    'sampling': 2,
    'classifier': 3,
    'mask': 4,
}


@dataclass
class PipelineConfig:
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    predictor: ClassifierConfig = field(default_factory=ClassifierConfig)
    consensus_tau: float = CONSENSUS_TAU
    paths: dict = field(default_factory=dict)
    output_dir: str = 'output'
    seed: int = SEED
    jobs: int = 1

    def validate(self):
        self.energy.validate()
        self.contact.validate()
        self.predictor.validate()
        if not self.consensus_tau > 0:
            raise ConfigException('consensus_tau', 'must be positive')
        if self.jobs < 1:
            raise ConfigException('jobs', 'must be at least 1')
        for key in self.paths:
            if key not in PATH_KEYS:
                raise ConfigException('paths.{}'.format(key))
        return self

    def seed_for(self, purpose):
        """Seed of one random stream, e.g. numpy.random.default_rng(
        cfg.seed_for('noise'))."""
        return self.seed + SEED_OFFSETS[purpose]

    def path(self, key, default=None):
        return self.paths.get(key, default)

    def to_dict(self):
        return {'energy': self.energy.to_dict(),
                'contact': self.contact.to_dict(),
                'predictor': self.predictor.to_dict(),
                'consensus_tau': self.consensus_tau,
                'paths': dict(self.paths),
                'output_dir': self.output_dir,
                'seed': self.seed,
                'jobs': self.jobs}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigException(unknown[0])
        for key in ('paths',):
            if key in d and not isinstance(d[key], dict):
                raise ConfigException(key, 'must be a mapping')
        cfg = cls(
            energy=EnergyConfig.from_dict(d.pop('energy', {}), 'energy'),
            contact=ContactConfig.from_dict(d.pop('contact', {}), 'contact'),
            predictor=ClassifierConfig.from_dict(d.pop('predictor', {}),
                                                 'predictor'),
            **d)
        return cfg.validate()


def load_config(path=None, **overrides):
    """Read and validate a config file; missing file means defaults.

    Top level keys given as overrides (e.g. seed from the command line)
    replace the file values when not None.
    """
    d = read_json(path) if path else {}
    for key, value in overrides.items():
        if value is not None:
            d[key] = value
    cfg = PipelineConfig.from_dict(d)
    logger.debug("Loaded config {}".format(path))
    return cfg


def save_config(cfg, path):
    write_json(path, cfg.to_dict())
