"""Command line of the toolbox pipeline.

    hsc-toolbox synth --output data
    hsc-toolbox fit --manifest data/manifest.json
    hsc-toolbox align --manifest data/manifest.json
    hsc-toolbox annotate --manifest data/manifest.json
    hsc-toolbox evaluate --manifest data/manifest.json
    hsc-toolbox export --manifest data/manifest.json

The config file is loaded and validated before any data is touched. The exit
code is 1 on any hard error, including frames the run ledger records as
failed.
"""

import argparse
import logging
import os
import sys

from hsc_toolbox.exceptions import HscToolboxException
from hsc_toolbox.logging.base_logging_conf import (
    attach_run_log, basic_logging_conf
)
from hsc_toolbox.metrics.aggregate import SUBSET_ROWS
from hsc_toolbox.pipeline import commands
from hsc_toolbox.pipeline.config import load_config
from hsc_toolbox.pipeline.manifest import MANIFEST_FILE

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('synth', 'fit', 'align', 'annotate', 'evaluate', 'export',
               'sample', 'train', 'predict')


def _predictions(values):
    """name=path pairs of --pred."""
    predictions = {}
    for value in values or []:
        name, sep, path = value.partition('=')
        if not sep or not name or not path:
            raise argparse.ArgumentTypeError(
                "--pred expects name=path, got '{}'".format(value))
        predictions[name] = path
    return predictions


def build_parser():
    parser = argparse.ArgumentParser(prog='hsc-toolbox',
                                     description=__doc__.split('\n')[0])
    parser.add_argument('command', choices=SUBCOMMANDS)
    parser.add_argument('--config', default=None,
                        help='pipeline config JSON, defaults otherwise')
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--jobs', type=int, default=None,
                        help='sequences processed in parallel')
    parser.add_argument('--split', default=None,
                        choices=('train', 'val', 'test'))
    parser.add_argument('--subset', default=None, choices=list(SUBSET_ROWS),
                        help='seen-flag subset row of the test sequences')
    parser.add_argument('--output', default=None,
                        help='output directory (dataset directory for '
                             'synth)')
    parser.add_argument('--manifest', default=None,
                        help='dataset manifest, <output>/dataset/{} by '
                             'default'.format(MANIFEST_FILE))
    parser.add_argument('--frames', type=int, default=None,
                        help='synth: frames per sequence')
    parser.add_argument('--baseline', default=None,
                        choices=commands.BASELINES,
                        help='annotate: label with a baseline instead')
    parser.add_argument('--pred', action='append', default=None,
                        metavar='NAME=PATH',
                        help='evaluate: prediction directory of a method, '
                             'repeatable')
    parser.add_argument('--contacts', default=None,
                        help='export: label directory to color with')
    return parser


def run(args):
    overrides = {'seed': args.seed, 'jobs': args.jobs}
    if args.output is not None and args.command != 'synth':
        overrides['output_dir'] = args.output
    cfg = load_config(args.config, **overrides)
    os.makedirs(cfg.output_dir, exist_ok=True)
    attach_run_log(cfg.output_dir)

    if args.command == 'synth':
        return commands.cmd_synth(cfg, output=args.output,
                                  n_frames=args.frames)

    manifest = args.manifest or os.path.join(
        cfg.path('dataset') or os.path.join(cfg.output_dir, 'dataset'),
        MANIFEST_FILE)
    if args.command == 'fit':
        return commands.cmd_fit(manifest, cfg, args.split, args.subset)
    if args.command == 'align':
        return commands.cmd_align(manifest, cfg)
    if args.command == 'annotate':
        return commands.cmd_annotate(manifest, cfg, args.split, args.subset,
                                     baseline=args.baseline)
    if args.command == 'evaluate':
        return commands.cmd_evaluate(manifest, cfg,
                                     _predictions(args.pred) or None,
                                     args.split or 'test', args.subset)
    if args.command == 'export':
        return commands.cmd_export(manifest, cfg, args.split, args.subset,
                                   contacts_dir=args.contacts)
    if args.command == 'sample':
        return commands.cmd_sample(manifest, cfg, args.split or 'train')
    if args.command == 'train':
        return commands.cmd_train(manifest, cfg, args.split or 'train')
    return commands.cmd_predict(manifest, cfg, args.split or 'test',
                                args.subset)


def main(argv=None):
    basic_logging_conf()
    args = build_parser().parse_args(argv)
    try:
        entry = run(args)
    except (HscToolboxException, OSError, ValueError,
            argparse.ArgumentTypeError):
        logger.exception("{} failed".format(args.command))
        return 1
    if entry.get('failed'):
        logger.error("{}: {} failed frames, see the run summary".format(
            args.command, entry['failed']))
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
