# coding=utf-8
'''
Command-line entry point.

    python main.py solve data/demo_game.json --objective average
    python main.py plan data/demo_game.json --objective average --goal 0.5 --trace logs/trace.jsonl
    python main.py boolplan data/flip.bp

Exit codes: 0 solved or feasible, 1 infeasible or unreachable, 2 usage or
input error, 3 internal error.
'''

from __future__ import print_function

import argparse
import json
import logging
import os
import sys

from boolsys.boolplan import FEASIBLE, boolean_cegar_plan, explicit_reach
from boolsys.formula import load_boolean_system, parse_boolean_system
from models import cegar
from models.abstraction import abstraction_to_dict, build_abstraction, initial_abstraction, load_partition
from models.game import MemorylessStrategy, Objective, classify, dumps_game, load_game, loads_game, validate
from models.solver import brute_force_values, game_solve, game_values, strategy_value
from utils import util
from utils.errors import SolverError
from utils.generators import gen_boolean_system_text, gen_gridworld, gen_random_game
from utils.report import RunReport
from utils.util import fmt

logger = logging.getLogger(__name__)


def _data_args(sub, what='game'):
    data_arg = sub.add_argument_group(title='Data')
    data_arg.add_argument('input', type=str, help='%s file' % what)
    data_arg.add_argument('--out', type=str, default=None, help='where to write the result artefact')
    return data_arg


def _solver_args(sub, goal=False):
    solver_arg = sub.add_argument_group(title='Solver')
    solver_arg.add_argument('--objective', type=str, default='discounted', choices=['discounted', 'average'])
    solver_arg.add_argument('--beta', type=float, default=0.9, help='discount factor in (0, 1)')
    if goal:
        solver_arg.add_argument('--goal', type=float, default=None, metavar='P', help='value player 1 must secure')
    return solver_arg


def _misc_args(sub):
    misc_arg = sub.add_argument_group('MISC')
    misc_arg.add_argument('--seed', type=int, default=0, metavar='S', help='random seed (default: 0)')
    misc_arg.add_argument('--report', type=str, default=None, help='write a JSON run report here')
    misc_arg.add_argument('--log_dir', type=str, default=None, help='write session.log into this directory')
    misc_arg.add_argument('--verbose', type=util.str2bool, nargs='?', const=True, default=False)
    return misc_arg


def get_parser():
    parser = argparse.ArgumentParser(prog='main.py', description='stochastic-game and boolean-system planner')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    sub = commands.add_parser('validate', help='check a game file')
    _data_args(sub)
    _misc_args(sub)

    sub = commands.add_parser('classify', help='GAME, MDP, DETERMINISTIC_GAME or TRANSITION_SYSTEM')
    _data_args(sub)
    _misc_args(sub)

    sub = commands.add_parser('solve', help='values and optimal strategies')
    _data_args(sub)
    solver_arg = _solver_args(sub, goal=True)
    solver_arg.add_argument('--strategy', type=str, default=None,
                            help='evaluate this strategy file against a best-responding opponent instead')
    _misc_args(sub)

    sub = commands.add_parser('oracle', help='values by enumerating all strategy pairs')
    _data_args(sub)
    _solver_args(sub)
    _misc_args(sub)

    sub = commands.add_parser('plan', help='counterexample-guided planning for a goal value')
    _data_args(sub)
    _solver_args(sub, goal=True)
    planner_arg = sub.add_argument_group(title='Planner')
    planner_arg.add_argument('--trace', type=str, default=None, help='JSON lines trace of the refinement loop')
    planner_arg.add_argument('--max-iters', dest='max_iters', type=int, default=None)
    _misc_args(sub)

    sub = commands.add_parser('abstract', help='abstract game induced by a partition')
    _data_args(sub)
    planner_arg = sub.add_argument_group(title='Planner')
    planner_arg.add_argument('--partition', type=str, default=None,
                             help='partition file (default: the initial abstraction)')
    _misc_args(sub)

    sub = commands.add_parser('boolplan', help='counterexample-guided planning for a boolean system')
    _data_args(sub, what='boolean system')
    planner_arg = sub.add_argument_group(title='Planner')
    planner_arg.add_argument('--trace', type=str, default=None)
    planner_arg.add_argument('--oracle', type=util.str2bool, nargs='?', const=True, default=False,
                             help='cross-check the verdict by explicit search')
    _misc_args(sub)

    sub = commands.add_parser('gen', help='generate instances')
    kinds = sub.add_subparsers(dest='kind', metavar='kind')
    kinds.required = True

    gen = kinds.add_parser('random', help='random game')
    gen_arg = gen.add_argument_group(title='Data')
    gen_arg.add_argument('--n-states', dest='n_states', type=int, default=8)
    gen_arg.add_argument('--out-degree', dest='out_degree', type=int, default=3)
    gen_arg.add_argument('--p1-frac', dest='p1_frac', type=float, default=0.4)
    gen_arg.add_argument('--p2-frac', dest='p2_frac', type=float, default=0.4)
    gen_arg.add_argument('--reward-min', dest='reward_min', type=float, default=0.0)
    gen_arg.add_argument('--reward-max', dest='reward_max', type=float, default=1.0)
    gen_arg.add_argument('--out', type=str, default=None)
    _misc_args(gen)

    gen = kinds.add_parser('gridworld', help='gridworld game')
    gen_arg = gen.add_argument_group(title='Data')
    gen_arg.add_argument('--width', type=int, default=3)
    gen_arg.add_argument('--height', type=int, default=3)
    gen_arg.add_argument('--slip', type=float, default=0.0)
    gen_arg.add_argument('--adversary', type=util.str2bool, nargs='?', const=True, default=False)
    gen_arg.add_argument('--out', type=str, default=None)
    _misc_args(gen)

    gen = kinds.add_parser('boolsys', help='random boolean system')
    gen_arg = gen.add_argument_group(title='Data')
    gen_arg.add_argument('--n-props', dest='n_props', type=int, default=4)
    gen_arg.add_argument('--n-actions', dest='n_actions', type=int, default=3)
    gen_arg.add_argument('--out', type=str, default=None)
    _misc_args(gen)
    return parser


def _emit(text, path):
    """Writes text to path, or to stdout when no path is given."""
    if path:
        util.make_dir(os.path.dirname(path))
        with open(path, 'w') as f:
            f.write(text)
        logger.info('wrote %s' % path)
    else:
        sys.stdout.write(text)


def _objective(config):
    return Objective(config.objective, config.beta if config.objective == 'discounted' else None)


def _print_values(game, values):
    for v in range(game.n_states):
        print('val1(%s)=%s' % (game.name(v), fmt(values[v])))


def run_validate(config, report):
    with open(config.input, 'r') as f:
        game = loads_game(f.read(), check=False)
    violations = validate(game)
    for line in violations:
        print(line)
    if violations:
        return report.finish('INVALID', violations=violations)
    print('valid: %r' % game)
    return report.finish('VALID')


def run_classify(config, report):
    kind = classify(load_game(config.input))
    print(kind)
    return report.finish('SOLVED', classification=kind)


def run_solve(config, report):
    game = load_game(config.input)
    objective = _objective(config)
    if config.strategy:
        with open(config.strategy, 'r') as f:
            strategy = MemorylessStrategy.from_dict(json.load(f), game)
        values, _ = strategy_value(game, objective, strategy)
        _print_values(game, values)
        return report.finish('SOLVED', values=values.to_dict(game), objective=repr(objective),
                             strategy_player=strategy.player)
    if config.goal is None:
        val1, opt1, _ = game_values(game, objective)
    else:
        result = game_solve(game, objective, config.goal)
        val1, opt1 = result.val1, result.opt1
    _print_values(game, val1)
    results = dict(values=val1.to_dict(game), objective=repr(objective))
    if config.out:
        _emit(json.dumps(opt1.to_dict(game), indent=2, sort_keys=True) + '\n', config.out)
    if config.goal is None:
        return report.finish('SOLVED', **results)
    print('goal %s: player %d wins' % (fmt(config.goal), result.winner))
    verdict = 'FEASIBLE' if result.winner == 1 else 'INFEASIBLE'
    return report.finish(verdict, goal=config.goal, **results)


def run_oracle(config, report):
    game = load_game(config.input)
    values = brute_force_values(game, _objective(config))
    _print_values(game, values)
    return report.finish('SOLVED', values=values.to_dict(game))


def run_plan(config, report):
    game = load_game(config.input)
    if config.goal is None:
        raise ValueError('plan needs --goal')
    trace = []
    outcome = cegar.counterexample_guided_plan(game, _objective(config), config.goal, max_iters=config.max_iters,
                                               on_iteration=trace.append)
    if config.trace:
        util.write_jsonl(trace, config.trace)
    report.trace = config.trace
    print('%s after %d refinements (%d abstract states)' % (outcome.verdict, outcome.refinements,
                                                            len(outcome.abstraction)))
    last = outcome.trace[-1]
    print('abstract val1(v0)=%s' % fmt(last.abstract_val1_v0))
    results = dict(goal=config.goal, refinements=outcome.refinements, abstract_val1_v0=last.abstract_val1_v0)
    if outcome.verdict == cegar.FEASIBLE:
        _emit(json.dumps(outcome.plan.to_dict(game), indent=2, sort_keys=True) + '\n', config.out or 'plan.json')
        return report.finish('FEASIBLE', **results)
    if outcome.concrete_spoiler is not None and config.out:
        _emit(json.dumps(outcome.concrete_spoiler.to_dict(game), indent=2, sort_keys=True) + '\n', config.out)
    return report.finish('INFEASIBLE', **results)


def run_abstract(config, report):
    game = load_game(config.input)
    partition = load_partition(config.partition, game) if config.partition else initial_abstraction(game)
    abstraction = build_abstraction(game, partition)
    _emit(json.dumps(abstraction_to_dict(abstraction), indent=2) + '\n', config.out)
    return report.finish('SOLVED', abstract_states=len(abstraction), repairs=len(abstraction.repairs))


def run_boolplan(config, report):
    system = load_boolean_system(config.input)
    trace = []
    outcome = boolean_cegar_plan(system, on_iteration=trace.append)
    if config.trace:
        util.write_jsonl(trace, config.trace)
    report.trace = config.trace
    results = dict(iterations=outcome.iterations, props=list(outcome.props))
    if config.oracle:
        reference = explicit_reach(system)
        if (reference is not None) != (outcome.verdict == FEASIBLE):
            raise SolverError('explicit search disagrees with the planner verdict %s' % outcome.verdict)
        logger.info('explicit search agrees')
    if outcome.verdict == FEASIBLE:
        print('FEASIBLE after %d iterations' % outcome.iterations)
        print('plan: %s' % ' '.join(outcome.plan))
        if config.out:
            states = [dict((p, int(v)) for p, v in state.items()) for state in outcome.states]
            _emit(json.dumps({'plan': outcome.plan, 'states': states}, indent=2, sort_keys=True) + '\n',
                  config.out)
        return report.finish('FEASIBLE', plan=outcome.plan, **results)
    print('UNREACHABLE after %d iterations' % outcome.iterations)
    return report.finish('UNREACHABLE', **results)


def run_gen(config, report):
    if config.kind == 'random':
        text = dumps_game(gen_random_game(config.n_states, config.out_degree, config.p1_frac, config.p2_frac,
                                          (config.reward_min, config.reward_max), config.seed))
    elif config.kind == 'gridworld':
        text = dumps_game(gen_gridworld(config.width, config.height, config.slip, config.adversary, config.seed))
    else:
        text = gen_boolean_system_text(config.n_props, config.n_actions, config.seed)
        parse_boolean_system(text)
    _emit(text, config.out)
    return report.finish('GENERATED', kind=config.kind)


COMMANDS = {
    'validate': run_validate,
    'classify': run_classify,
    'solve': run_solve,
    'oracle': run_oracle,
    'plan': run_plan,
    'abstract': run_abstract,
    'boolplan': run_boolplan,
    'gen': run_gen,
}


def cli_dispatch(argv=None):
    parser = get_parser()
    try:
        config = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    util.prepare_dirs_loggers(config, script='main.py %s' % config.command)
    util.get_env_info()
    util.init_seed(config.seed)
    report = RunReport.start(config.command, getattr(config, 'input', None), config.seed)
    logger.debug('config: %s' % vars(config))

    try:
        code = COMMANDS[config.command](config, report)
    except (ValueError, IOError, OSError) as e:
        # GameError, PartitionError, ParseError and GuardError are ValueErrors
        print('error: %s' % e, file=sys.stderr)
        code = report.finish('INPUT_ERROR', error=str(e))
    except (SolverError, AssertionError) as e:
        print('internal error: %s' % e, file=sys.stderr)
        code = report.finish('INTERNAL_ERROR', error=str(e))
    except Exception as e:
        logger.exception('unexpected failure')
        print('internal error: %s: %s' % (type(e).__name__, e), file=sys.stderr)
        code = report.finish('INTERNAL_ERROR', error=str(e))
    if config.report:
        report.write(config.report)
    return code


if __name__ == '__main__':
    sys.exit(cli_dispatch())
