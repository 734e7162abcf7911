import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from game_a.domain import SolutionKind
from oracle.domain import NashCertificate
from qmatrix.exceptions import DefinitionError, DegenerateGameError, DomainError, InadmissibleGameError, ValidationError

from . import services

QUARTER_PI = math.pi / 4

PURE_SIGMA_X = """
model: one_qubit_pure
P1: [[0, 1], [1, 0]]
P2: [[1, 0], [0, -1]]
"""

PURE_WORKED = """
model: one_qubit_pure
P1: [[-1, 0], [0, 1]]
P2: [[0, 1], [1, 0]]
"""

PURE_CONSTANT = """
model: one_qubit_pure
P1: [[1, 0], [0, 1]]
P2: [[1, 0], [0, 1]]
"""

PURE_DEGENERATE = """
model: one_qubit_pure
P1: [[1, 0], [0, 1]]
P2: [[0, 1], [1, 0]]
"""

MIXED_QUARTER = """
model: one_qubit_mixed
p: 0.25
P1: [[2, 0], [0, 0]]
P2: [[0, 1], [1, 0]]
"""

BELL_ZZ = """
model: two_qubit_bell
P1: [[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]]
P2: [[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]]
"""

BELL_INADMISSIBLE = """
model: two_qubit_bell
P1: [[0, 1, 1, 0], [1, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]]
P2: [[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]]
"""

CUSTOM_IDENTITY = """
model: custom
dimension: 2
initial_state: [[1, 0], [0, 0]]
P1: [[1, 0], [0, 1]]
P2: [[1, 0], [0, 1]]
players:
  - {kind: rotation, lo: 0, hi: 0.7853981633974483}
  - {kind: rotation, lo: 0, hi: 0.7853981633974483}
seed: 7
tolerances: {VALIDATION_TOL: 1.0e-9}
"""

NEARLY_HERMITIAN = """
model: one_qubit_pure
P1: [[-1, 1.0e-9], [0, 1]]
P2: [[0, 1], [1, 0]]
"""

CUSTOM_ROUNDED_BOUNDS = """
model: custom
dimension: 2
initial_state: [[0.5, 0.5], [0.5, 0.5]]
P1: [[-1, 0], [0, 1]]
P2: [[0, 1], [1, 0]]
players:
  - {kind: rotation, lo: 0, hi: 0.785398163397}
  - {kind: rotation, lo: 0, hi: 0.785398163397}
ordering: dynamic
"""


class DefinitionFileMixin:

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)

    def write_definition(self, text, name='game.yaml'):
        path = Path(self._tmp.name) / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def run_command(self, name, *args, **options):
        out = StringIO()
        call_command(name, *args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()


class ParseDefinitionTests(SimpleTestCase):

    def test_minimal_pure_definition_is_valid(self):
        definition = services.parse_definition(PURE_SIGMA_X)
        self.assertEqual(definition.model, 'one_qubit_pure')
        np.testing.assert_array_equal(definition.P1, np.array([[0, 1], [1, 0]], dtype=complex))
        self.assertIsNone(definition.p)

    def test_complex_entries_use_pairs(self):
        definition = services.parse_definition(
            'model: one_qubit_pure\nP1: [[0, [0, -1]], [[0, 1], 0]]\nP2: [[1, 0], [0, 1]]\n'
        )
        self.assertEqual(definition.P1[0, 1], -1j)
        self.assertEqual(definition.P1[1, 0], 1j)

    def test_two_qubit_model_rejects_two_by_two_payoff(self):
        with self.assertRaises(DefinitionError) as ctx:
            services.parse_definition(PURE_SIGMA_X.replace('one_qubit_pure', 'two_qubit_bell'))
        self.assertIn('Dimension error', str(ctx.exception))
        self.assertIn('P1', ctx.exception.errors)

    def test_mixing_probability_out_of_range(self):
        with self.assertRaises(DefinitionError) as ctx:
            services.parse_definition(MIXED_QUARTER.replace('0.25', '1.2'))
        self.assertIn('p', ctx.exception.errors)

    def test_mixed_model_requires_p(self):
        with self.assertRaises(DefinitionError):
            services.parse_definition(MIXED_QUARTER.replace('p: 0.25\n', ''))

    def test_unknown_keys_are_rejected(self):
        with self.assertRaises(DefinitionError) as ctx:
            services.parse_definition(PURE_SIGMA_X + 'theta: 0.3\n')
        self.assertIn('theta', ctx.exception.errors)

    def test_unknown_tolerance_keys_are_rejected(self):
        with self.assertRaises(DefinitionError):
            services.parse_definition(PURE_SIGMA_X + 'tolerances: {NOT_A_SETTING: 1.0}\n')

    def test_non_hermitian_payoff_names_the_invariant(self):
        with self.assertRaises(DefinitionError) as ctx:
            services.parse_definition(PURE_SIGMA_X.replace('[[0, 1], [1, 0]]', '[[1, 1], [0, 1]]'))
        self.assertIn('hermitian', str(ctx.exception))

    def test_validation_tolerance_applies_to_the_payoffs(self):
        with self.assertRaises(DefinitionError):
            services.parse_definition(NEARLY_HERMITIAN)
        definition = services.parse_definition(NEARLY_HERMITIAN + 'tolerances: {VALIDATION_TOL: 1.0e-8}\n')
        self.assertEqual(definition.tolerances['VALIDATION_TOL'], 1e-8)

    def test_yaml_error_reports_line_and_column(self):
        with self.assertRaises(DefinitionError) as ctx:
            services.parse_definition('model: one_qubit_pure\nP1: [[0, 1], [1, 0]\nP2: [[1, 0], [0, 1]]\n')
        self.assertIsNotNone(ctx.exception.line)
        self.assertIsNotNone(ctx.exception.column)
        self.assertTrue(str(ctx.exception).startswith(f"line {ctx.exception.line}, column"))

    def test_document_must_be_a_mapping(self):
        with self.assertRaises(DefinitionError):
            services.parse_definition('- just\n- a list\n')

    def test_json_documents_are_accepted(self):
        definition = services.parse_definition(
            '{"model": "one_qubit_pure", "P1": [[0, 1], [1, 0]], "P2": [[1, 0], [0, -1]]}'
        )
        self.assertEqual(definition, services.parse_definition(PURE_SIGMA_X))

    def test_custom_game_needs_two_players(self):
        text = CUSTOM_IDENTITY.replace('  - {kind: rotation, lo: 0, hi: 0.7853981633974483}\n', '', 1)
        with self.assertRaises(DefinitionError) as ctx:
            services.parse_definition(text)
        self.assertIn('players', ctx.exception.errors)

    def test_custom_keys_rejected_on_named_models(self):
        with self.assertRaises(DefinitionError):
            services.parse_definition(PURE_SIGMA_X + 'dimension: 2\n')


class SerializeDefinitionTests(SimpleTestCase):

    def test_round_trip(self):
        for text in (PURE_SIGMA_X, MIXED_QUARTER, BELL_ZZ, CUSTOM_IDENTITY):
            definition = services.parse_definition(text)
            again = services.parse_definition(services.serialize_definition(definition))
            self.assertEqual(definition, again)
            self.assertEqual(services.serialize_definition(definition), services.serialize_definition(again))

    def test_complex_entries_survive_round_trip(self):
        definition = services.parse_definition(
            'model: one_qubit_pure\nP1: [[0, [0, -1]], [[0, 1], 0]]\nP2: [[1, 0], [0, 1]]\n'
        )
        again = services.parse_definition(services.serialize_definition(definition))
        np.testing.assert_array_equal(again.P1, definition.P1)


class DefinitionRunnerTests(SimpleTestCase):

    def runner(self, text):
        return services.DefinitionRunner(services.parse_definition(text))

    def test_sigma_x_at_origin(self):
        f1, _ = self.runner(PURE_SIGMA_X).evaluate(0.0, 0.0)
        self.assertAlmostEqual(f1, 1.0, delta=1e-12)

    def test_bell_zz_at_origin(self):
        f1, f2 = self.runner(BELL_ZZ).evaluate(0.0, 0.0)
        self.assertAlmostEqual(f1, -1.0, delta=1e-12)
        self.assertAlmostEqual(f2, -1.0, delta=1e-12)

    def test_custom_identity_payoffs(self):
        f1, f2 = self.runner(CUSTOM_IDENTITY).evaluate(0.3, 0.2)
        self.assertAlmostEqual(f1, 1.0, delta=1e-12)
        self.assertAlmostEqual(f2, 1.0, delta=1e-12)

    def test_worked_equilibrium(self):
        report, solution = self.runner(PURE_WORKED).solve(verify=True)
        self.assertEqual(solution.kind, SolutionKind.UNIQUE)
        self.assertAlmostEqual(solution.theta, QUARTER_PI, delta=1e-9)
        self.assertAlmostEqual(solution.phi, 0.0, delta=1e-9)
        self.assertTrue(solution.certificate.passed)
        self.assertAlmostEqual(report.physical_payoff(solution.theta, solution.phi, 1), 1.0, delta=1e-9)
        self.assertAlmostEqual(report.physical_payoff(solution.theta, solution.phi, 2), 0.0, delta=1e-9)

    def test_unverified_solve_has_no_certificate(self):
        _, solution = self.runner(PURE_WORKED).solve(verify=False)
        self.assertIsNone(solution.certificate)

    def test_definition_validation_tolerance_reaches_the_reducer(self):
        report = self.runner(NEARLY_HERMITIAN + 'tolerances: {VALIDATION_TOL: 1.0e-8}\n').reduce()
        self.assertAlmostEqual(report.params.q1, 1.0, places=9)

    def test_custom_game_with_rounded_quarter_pi_bounds(self):
        report, solution = self.runner(CUSTOM_ROUNDED_BOUNDS).solve(verify=True)
        self.assertEqual(report.inadmissible_players, ())
        self.assertAlmostEqual(solution.theta, QUARTER_PI, delta=1e-9)
        self.assertAlmostEqual(solution.phi, 0.0, delta=1e-9)
        self.assertTrue(solution.certificate.passed)
        self.assertAlmostEqual(solution.theta, QUARTER_PI, delta=1e-9)

    def test_mixed_report_shows_printed_cos_residual(self):
        report = self.runner(MIXED_QUARTER).reduce()
        by_key = {(r.name, r.player, r.source): r for r in report.residuals}
        derived = by_key[('cos_coeff', 1, 'derived')]
        printed = by_key[('cos_coeff', 1, 'printed')]
        self.assertAlmostEqual(derived.value, -0.5, delta=1e-12)
        self.assertLessEqual(derived.residual, 1e-12)
        self.assertAlmostEqual(printed.value, -1.5, delta=1e-12)
        self.assertAlmostEqual(printed.residual, 1.0, delta=1e-9)
        text = services.format_report(report)
        self.assertIn('(1-p)(d-a)', text)
        self.assertIn('(1-2p)(d-a)/2', text)

    def test_inadmissible_two_qubit_game(self):
        report = self.runner(BELL_INADMISSIBLE).reduce()
        self.assertEqual(report.inadmissible_players, (1,))
        with self.assertRaises(InadmissibleGameError):
            self.runner(BELL_INADMISSIBLE).solve()

    def test_sweep_of_constant_game(self):
        frame = self.runner(PURE_CONSTANT).sweep(3)
        self.assertEqual(list(frame.columns), ['theta', 'phi', 'f1', 'f2'])
        self.assertEqual(len(frame), 9)
        np.testing.assert_allclose(frame[['f1', 'f2']].to_numpy(), 1.0, atol=1e-12)
        np.testing.assert_allclose(frame['theta'].to_numpy()[:3], 0.0)
        np.testing.assert_allclose(frame['phi'].to_numpy()[:3], [0.0, QUARTER_PI / 2, QUARTER_PI])

    def test_sweep_csv_format(self):
        csv = services.sweep_csv(self.runner(PURE_CONSTANT).sweep(2))
        lines = csv.split('\n')
        self.assertEqual(lines[0], 'theta,phi,f1,f2')
        self.assertEqual(lines[1], '0,0,1,1')
        self.assertEqual(lines[4], '0.785398163397,0.785398163397,1,1')
        self.assertNotIn('\r', csv)

    def test_sweep_rejects_empty_grid(self):
        with self.assertRaises(DomainError):
            self.runner(PURE_CONSTANT).sweep(0)


class FormattingTests(SimpleTestCase):

    def test_angles_show_degrees(self):
        self.assertEqual(services.format_angle(QUARTER_PI), '0.785398163397 rad (45 deg)')

    def test_exit_codes(self):
        self.assertEqual(services.exit_code_for(DefinitionError('bad')), 2)
        self.assertEqual(services.exit_code_for(ValidationError('hermitian', 1.0)), 2)
        self.assertEqual(services.exit_code_for(InadmissibleGameError([1])), 3)
        self.assertEqual(services.exit_code_for(DegenerateGameError([2])), 4)
        self.assertEqual(services.exit_code_for(RuntimeError('other')), 1)


class CommandTests(DefinitionFileMixin, SimpleTestCase):

    def assertExitCode(self, code, name, *args, **options):
        with self.assertRaises(CommandError) as ctx:
            self.run_command(name, *args, **options)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def test_eval(self):
        out = self.run_command('qg_eval', self.write_definition(PURE_SIGMA_X), theta=0.0, phi=0.0)
        self.assertIn('f1 = 1', out)

    def test_eval_outside_domain_is_a_validation_error(self):
        self.assertExitCode(2, 'qg_eval', self.write_definition(PURE_SIGMA_X), theta=1.0, phi=0.0)

    def test_invalid_file_exits_with_two(self):
        path = self.write_definition(PURE_SIGMA_X.replace('one_qubit_pure', 'two_qubit_bell'))
        self.assertExitCode(2, 'qg_reduce', path)

    def test_missing_file_exits_with_two(self):
        self.assertExitCode(2, 'qg_reduce', str(Path(self._tmp.name) / 'missing.yaml'))

    def test_reduce_shows_residuals(self):
        out = self.run_command('qg_reduce', self.write_definition(MIXED_QUARTER))
        self.assertIn('formula residuals', out)
        self.assertIn('printed', out)
        self.assertIn('formula residuals above tolerance', out)

    def test_reduce_inadmissible_game_still_reports(self):
        out = self.run_command('qg_reduce', self.write_definition(BELL_INADMISSIBLE))
        self.assertIn('NOT admissible', out)

    def test_solve_worked_example(self):
        out = self.run_command('qg_solve', self.write_definition(PURE_WORKED), verify=True)
        self.assertIn('unique equilibrium', out)
        self.assertIn('(45 deg)', out)
        self.assertIn('certificate: PASS', out)

    def test_solve_inadmissible_exits_with_three(self):
        self.assertExitCode(3, 'qg_solve', self.write_definition(BELL_INADMISSIBLE))

    def test_solve_degenerate_exits_with_four(self):
        self.assertExitCode(4, 'qg_solve', self.write_definition(PURE_DEGENERATE))

    def test_solve_large_constant_payoff_exits_with_four(self):
        path = self.write_definition(PURE_DEGENERATE.replace('[[1, 0], [0, 1]]', '[[1000000, 0], [0, 1000000]]'))
        self.assertExitCode(4, 'qg_solve', path)

    def test_solve_failed_certificate_exits_with_five(self):
        failing = NashCertificate(
            epsilon=1e-6, grid_n=500, max_unilateral_gain=(0.5, 0.0), passed=False, checked_point=(0.0, 0.0)
        )
        with mock.patch('reductions.services.oracle.verify_points', return_value=failing):
            self.assertExitCode(5, 'qg_solve', self.write_definition(PURE_WORKED), verify=True)

    def test_sweep_writes_csv(self):
        path = Path(self._tmp.name) / 'sweep.csv'
        self.run_command('qg_sweep', self.write_definition(PURE_CONSTANT), n=3, out=str(path))
        rows = path.read_bytes().decode('utf-8').splitlines()
        self.assertEqual(rows[0], 'theta,phi,f1,f2')
        self.assertEqual(len(rows), 10)
        self.assertTrue(all(row.endswith(',1,1') for row in rows[1:]))

    def test_sweep_is_byte_deterministic(self):
        definition = self.write_definition(MIXED_QUARTER)
        first, second = Path(self._tmp.name) / 'a.csv', Path(self._tmp.name) / 'b.csv'
        self.run_command('qg_sweep', definition, n=7, out=str(first))
        self.run_command('qg_sweep', definition, n=7, out=str(second))
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_sweep_to_stdout(self):
        out = self.run_command('qg_sweep', self.write_definition(PURE_CONSTANT), n=2)
        self.assertEqual(out.splitlines()[0], 'theta,phi,f1,f2')
        self.assertEqual(len(out.splitlines()), 5)

    def test_check_definition(self):
        out = self.run_command('qg_check', self.write_definition(PURE_WORKED))
        self.assertIn('passed', out)

    def test_check_single_suite(self):
        out = self.run_command('qg_check', suites=['oracle'], seed=3)
        self.assertIn('oracle: 100/100 passed', out)

    def test_check_game_engine_suite_counts(self):
        out = self.run_command('qg_check', suites=['game_engine'], seed=3)
        self.assertIn('game_engine: 500/500 passed', out)

    def test_check_lists_failing_projection_payoff_checks(self):
        out = StringIO()
        with mock.patch('game_engine.services.projection_probabilities', return_value=np.zeros(4)):
            with self.assertRaises(CommandError) as ctx:
                call_command('qg_check', suites=['game_engine'], seed=3, stdout=out, stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 5)
        self.assertIn('game_engine: 400/500 passed', out.getvalue())
        self.assertIn('projection payoff matches probability sum for sample 0', out.getvalue())

    def test_check_unknown_suite(self):
        self.assertExitCode(2, 'qg_check', suites=['nope'])


class InvariantSuiteRunnerTests(SimpleTestCase):

    def test_suites_pass(self):
        runner = services.InvariantSuiteRunner(seed=11)
        for result in runner.run(['qmatrix', 'game_engine']):
            self.assertEqual(result['failed'], 0, result['issues'])
            self.assertGreater(result['total'], 0)

    def test_game_engine_suite_covers_every_invariant(self):
        checks = list(services.InvariantSuiteRunner(seed=11).check_game_engine(np.random.default_rng(11)))
        self.assertEqual([label for label, ok in checks if not ok], [])
        labels = [label for label, _ in checks]
        self.assertEqual(sum('trace preserved' in label for label in labels), 200)
        self.assertEqual(sum('payoff linear in P' in label for label in labels), 100)
        self.assertEqual(sum('local operations commute' in label for label in labels), 100)
        self.assertEqual(sum('projection payoff' in label for label in labels), 100)

    def test_reductions_suite_covers_every_invariant(self):
        checks = list(services.InvariantSuiteRunner(seed=11).check_reductions(np.random.default_rng(11)))
        self.assertEqual([label for label, ok in checks if not ok], [])
        labels = [label for label, _ in checks]
        for model in ('one_qubit_pure', 'one_qubit_mixed', 'two_qubit_bell'):
            for kind in ('round trip', 'sum dependence', 'offset identity'):
                self.assertEqual(sum(label.startswith(f"{model} {kind}") for label in labels), 200, (model, kind))
        self.assertEqual(sum('mixed p = 0.5 degenerate' in label for label in labels), 33)
        self.assertEqual(sum('matches the pure |1> state' in label for label in labels), 34)

    def test_definition_check_on_bell_game(self):
        result = services.InvariantSuiteRunner(seed=5).check_definition(services.parse_definition(BELL_ZZ))
        self.assertEqual(result['failed'], 0, result['issues'])
        self.assertEqual(result['total'], 5)


class ShippedDefinitionTests(SimpleTestCase):

    def test_every_shipped_definition_parses(self):
        paths = sorted((Path(settings.BASE_DIR) / 'definitions').glob('*.yaml'))
        self.assertTrue(paths)
        for path in paths:
            definition = services.load_definition(path)
            f1, f2 = services.DefinitionRunner(definition).evaluate(0.0, 0.0)
            self.assertTrue(math.isfinite(f1) and math.isfinite(f2), path.name)
