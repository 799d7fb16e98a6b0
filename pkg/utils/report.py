'''
Run reports written by main.py --report.
'''

import hashlib
import json
import logging
import os

from utils.util import Pack, get_ms, make_dir

logger = logging.getLogger(__name__)

# verdict -> exit code
EXIT_CODES = {
    'SOLVED': 0,
    'FEASIBLE': 0,
    'VALID': 0,
    'GENERATED': 0,
    'INFEASIBLE': 1,
    'UNREACHABLE': 1,
    'INPUT_ERROR': 2,
    'INVALID': 2,
    'INTERNAL_ERROR': 3,
}


def input_digest(path):
    if not path or not os.path.isfile(path):
        return None
    sha = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            sha.update(chunk)
    return 'sha256:' + sha.hexdigest()


class RunReport(Pack):
    @classmethod
    def start(cls, command, input_path=None, seed=None):
        return cls(command=command, input=input_path, input_digest=input_digest(input_path), seed=seed,
                   verdict=None, exit_code=None, results={}, trace=None, started_ms=get_ms(), elapsed_ms=None)

    def finish(self, verdict, **results):
        if verdict not in EXIT_CODES:
            raise ValueError('unknown verdict %r' % (verdict,))
        self.verdict = verdict
        self.exit_code = EXIT_CODES[verdict]
        self.results.update(results)
        self.elapsed_ms = get_ms() - self.started_ms
        return self.exit_code

    def write(self, path):
        make_dir(os.path.dirname(path))
        doc = dict(self)
        doc.pop('started_ms', None)
        with open(path, 'w') as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write('\n')
        logger.debug('report written to %s' % path)
