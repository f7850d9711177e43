"""Defaults shared by the toolbox components.

Values here are configuration defaults, every one of them can be overridden
through the pipeline config file. Don't forget to document a new key in the
README when you add one.
"""

# contact annotation
THRESHOLD_FOOT = 0.05
THRESHOLD_BODY = 0.025
NORMAL_MAX_ANGLE = 90.0
UNIFORM_THRESHOLD = 0.05

FOOT_SOLE = 'FOOT_SOLE'

# multiview consensus
CONSENSUS_TAU = 20.0
# pixels, how close the accumulated triplet error stays to the best triplet
CONSENSUS_SOFTMIN_PX = 10.0
MIN_TRIPLET_CONFIDENCE = 0.3

# energy weights
SIGMA_GM = 100.0
LAMBDA_POSE = 1e-3
LAMBDA_BEND = 10.0
LAMBDA_SHAPE = 0.0
LAMBDA_BONE = 0.5
LAMBDA_SM_BODY = 100.0
LAMBDA_SM_HAND = 1.0
BEND_KAPPA = 1.0
WINDOW = 30
MAX_ITERATIONS = 100
TOLERANCE = 1e-9

# bending joints: joint name -> (axis, sign); sign * pose[axis] is the
# flexion angle, negative flexion is the anatomically impossible side
BEND_JOINTS = {
    'left_knee': (0, -1.0),
    'right_knee': (0, -1.0),
    'left_elbow': (2, 1.0),
    'right_elbow': (2, -1.0),
}

# per-vertex classifier
HIDDEN_UNITS = 64
# relative loss decrease below which training stops early
TRAINING_TOLERANCE = 1e-12
EPOCHS = 200
MASK_FRACTION = 0.3
PROBABILITY_CLAMP = 1e-7

# dataset
FPS = 30
SEED = 0
SPLITS = ('train', 'val', 'test')

# file io retries
RETRY_FILE_OP_SECONDS = 1
RETRY_FILE_OP_TIMES = 5
RETRY_DATABASE_OP_SECONDS = 1
RETRY_DATABASE_OP_TIMES = 60

# run ledger
RUN_DB_FILE = 'run.db'
RUN_LOG_FILE = 'run.log'
RUN_DB_SCHEMA_NAME = 'run_db'
RUN_DB_SCHEMA_VERSION = 1
