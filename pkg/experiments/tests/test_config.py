import math
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings

from experiments.config import GRID_DEPTHS, SweepSpec, default_output, parse_config, tokenize
from pinns.exceptions import ConfigParseError
from pinns.systems import heat_eigenvalues


class ParseConfigTests(SimpleTestCase):
    def test_minimal_shm_config_expands_full_grid(self):
        spec = parse_config('benchmark = shm\ncomplexity = 1\n')
        runs = spec.runs()
        self.assertEqual(spec.grid_size, 48)
        self.assertEqual(len(runs), 48)
        self.assertTrue(all(run.D == 256 for run in runs))
        self.assertAlmostEqual(spec.horizon_for(1), math.pi)
        self.assertEqual(spec.depths, GRID_DEPTHS)
        self.assertEqual(spec.seeds, (0,))

    def test_shm_points_scale_with_horizon(self):
        spec = parse_config('benchmark = shm\ncomplexity = [2, 8]')
        self.assertEqual(spec.points_for(2), 512)
        self.assertEqual(spec.points_for(8), 2048)

    def test_heat_defaults(self):
        spec = parse_config('benchmark = heat\ncomplexity = [4]')
        run = spec.runs()[0]
        self.assertEqual(run.D, 1024)
        system = run.training_config().system
        self.assertEqual(system.horizon, 0.1)
        self.assertAlmostEqual(system.nu_ic, np.abs(heat_eigenvalues(4)).max())

    def test_commas_comments_and_aliases(self):
        text = (
            '# toy sweep\n'
            'benchmark = SHM, complexity = [1, 2]  # two horizons\n'
            'depth = [2], width = 64, learning_rate = 1e-3\n'
            'arch = resnet, formulation = [uniform, adaptive]\n'
            'seed = 3, iterations = 10, d = 32, probes = 0\n'
        )
        spec = parse_config(text)
        self.assertEqual(spec.benchmark, 'shm')
        self.assertEqual(spec.complexity_values, (1, 2))
        self.assertEqual(spec.depths, (2,))
        self.assertEqual(spec.widths, (64,))
        self.assertEqual(spec.learning_rates, (1e-3,))
        self.assertEqual(spec.archs, ('resnet',))
        self.assertEqual(spec.seeds, (3,))
        self.assertEqual(spec.iterations, 10)
        self.assertEqual(spec.D, 32)
        self.assertEqual(spec.probes, 0)
        self.assertEqual(len(spec.runs()), 4)

    def test_complexity_deduplicated_and_sorted(self):
        spec = parse_config('benchmark = heat\ncomplexity = [16, 4, 16]')
        self.assertEqual(spec.complexity_values, (4, 16))

    def test_solver_defaults_from_settings(self):
        with override_settings(PINN_DEFAULTS={'rtol': 1e-6, 'atol': 1e-9, 'probes': 7}):
            spec = parse_config('benchmark = shm\ncomplexity = 1')
        self.assertEqual((spec.rtol, spec.atol, spec.probes), (1e-6, 1e-9, 7))

    def test_out_key(self):
        spec = parse_config('benchmark = shm\ncomplexity = 1\nout = results/toy.csv')
        self.assertEqual(spec.output_path, 'results/toy.csv')


class ConfigErrorTests(SimpleTestCase):
    def assertParseError(self, text, key=None, line=None):
        with self.assertRaises(ConfigParseError) as ctx:
            parse_config(text)
        if key is not None:
            self.assertEqual(ctx.exception.key, key)
        if line is not None:
            self.assertEqual(ctx.exception.line, line)
        return ctx.exception

    def test_depth_outside_grid(self):
        error = self.assertParseError('benchmark = shm\ncomplexity = 1\ndepth = [3]\n', key='depth', line=3)
        self.assertIn('2, 4, 8', str(error))
        self.assertIn('line 3', str(error))

    def test_unknown_key(self):
        self.assertParseError('benchmark = shm\ncomplexity = 1\nbatch = 32', key='batch', line=3)

    def test_duplicate_key(self):
        self.assertParseError('benchmark = shm, complexity = 1\ncomplexity = 2', key='complexity', line=2)

    def test_missing_equals(self):
        self.assertParseError('benchmark shm', line=1)

    def test_unterminated_list(self):
        self.assertParseError('benchmark = shm\ncomplexity = [1, 2', key='complexity', line=2)

    def test_missing_value(self):
        self.assertParseError('benchmark =\ncomplexity = 1', key='benchmark', line=1)

    def test_complexity_not_in_benchmark_range(self):
        self.assertParseError('benchmark = shm\ncomplexity = 3', key='complexity')
        self.assertParseError('benchmark = heat\ncomplexity = 1024', key='complexity')

    def test_benchmark_required(self):
        self.assertParseError('complexity = 1', key='benchmark')

    def test_non_positive_rates(self):
        self.assertParseError('benchmark = shm\ncomplexity = 1\nlr = [0.001, -1]', key='lr', line=3)
        self.assertParseError('benchmark = shm\ncomplexity = 1\nrtol = 0', key='rtol')

    def test_unknown_choice(self):
        self.assertParseError('benchmark = wave\ncomplexity = 1', key='benchmark')
        self.assertParseError('benchmark = shm\ncomplexity = 1\narch = cnn', key='arch')


class TokenizeTests(SimpleTestCase):
    def test_lists_keep_inner_commas(self):
        values, lines = tokenize('depth = [2, 4], width = [64, 128]\n\nseeds = [0, 1]')
        self.assertEqual(values, {'depth': [2, 4], 'width': [64, 128], 'seeds': [0, 1]})
        self.assertEqual(lines, {'depth': 1, 'width': 1, 'seeds': 3})

    def test_scalars_wrapped_for_list_keys(self):
        values, _ = tokenize('width = 64\niterations = 5')
        self.assertEqual(values, {'width': [64], 'iterations': 5})


class RunSpecTests(SimpleTestCase):
    def test_run_order_and_ids(self):
        spec = SweepSpec(benchmark='shm', complexity_values=(1, 2), depths=(2, 4), widths=(64,),
                         learning_rates=(1e-3,), archs=('mlp',), formulations=('uniform',), seeds=(0, 1))
        ids = [run.run_id for run in spec.runs()]
        self.assertEqual(ids[0], 'shm-c1-s0-d2-w64-lr0.001-mlp-uniform')
        self.assertEqual(ids[1], 'shm-c1-s0-d4-w64-lr0.001-mlp-uniform')
        self.assertEqual(ids[2], 'shm-c1-s1-d2-w64-lr0.001-mlp-uniform')
        self.assertEqual(ids[-1], 'shm-c2-s1-d4-w64-lr0.001-mlp-uniform')
        self.assertEqual(len(set(ids)), 8)

    def test_training_config(self):
        spec = SweepSpec(benchmark='heat', complexity_values=(8,), depths=(2,), widths=(64,),
                         learning_rates=(1e-4,), archs=('resnet',), formulations=('adaptive',), D=16)
        config = spec.runs()[0].training_config()
        self.assertEqual(config.network.output_dim, 8)
        self.assertTrue(config.network.is_resnet)
        self.assertEqual(config.D, 16)
        self.assertEqual(config.lambda_lr, 1e-4)

    @override_settings(PINN_OUTPUT_DIR='/tmp/pinn-results')
    def test_default_output(self):
        self.assertEqual(default_output('toy.csv'), Path('/tmp/pinn-results/toy.csv'))
