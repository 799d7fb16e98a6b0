'''
Utility functions
'''

import argparse
import json
import logging
import os
import random
import sys
import time

import numpy as np
import scipy


class Pack(dict):
    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name)

    def __setattr__(self, name, value):
        self[name] = value


def str2bool(v):
    if v.lower() in ('yes', 'true', 't', 'y', '1'):
        return True
    elif v.lower() in ('no', 'false', 'f', 'n', '0'):
        return False
    else:
        raise argparse.ArgumentTypeError('Boolean value expected.')


def fmt(x):
    # every number the CLI prints goes through here
    return '%.9f' % x


def get_env_info():
    logger = logging.getLogger(__name__)
    logger.debug('Python version={}'.format(sys.version.split()[0]))
    logger.debug('numpy version={}'.format(np.__version__))
    logger.debug('scipy version={}'.format(scipy.__version__))


def get_ms():
    return time.time() * 1000


def init_seed(seed=None):
    if seed is None:
        seed = int(get_ms() // 1000)
    np.random.seed(seed)
    random.seed(seed)
    return seed


# creat a new dir if it do not exist; existing content is kept
def make_dir(path):
    if path and not os.path.exists(path):
        os.makedirs(path)


def write_jsonl(records, path):
    make_dir(os.path.dirname(path))
    with open(path, 'w') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + '\n')


def read_jsonl(path):
    with open(path, 'r') as f:
        return [json.loads(line) for line in f if line.strip()]


def prepare_dirs_loggers(config, script=""):
    logFormatter = logging.Formatter("%(message)s")
    rootLogger = logging.getLogger()
    rootLogger.setLevel(logging.DEBUG)
    for handler in list(rootLogger.handlers):
        rootLogger.removeHandler(handler)

    consoleHandler = logging.StreamHandler(sys.stderr)
    consoleHandler.setLevel(logging.DEBUG if getattr(config, 'verbose', False) else logging.WARNING)
    consoleHandler.setFormatter(logFormatter)
    rootLogger.addHandler(consoleHandler)

    log_dir = getattr(config, 'log_dir', None)
    if not log_dir:
        return

    make_dir(log_dir)
    fileHandler = logging.FileHandler(os.path.join(log_dir, 'session.log'))
    fileHandler.setLevel(logging.DEBUG)
    fileHandler.setFormatter(logFormatter)
    rootLogger.addHandler(fileHandler)
    if script:
        rootLogger.info('%s started' % script)
