from datetime import timedelta
from pathlib import Path

from django.contrib.auth.models import User
from django.test import TestCase
from django.urls import reverse
from django.utils import timezone

from experiments.config import SweepSpec
from experiments.harness import ResultRow, SweepResult
from experiments.models import RunResult, SweepRecord


def recorded_sweep():
    spec = SweepSpec(benchmark='shm', complexity_values=(1, 2), depths=(2,), widths=(64,),
                     learning_rates=(1e-3,), archs=('mlp',), formulations=('uniform', 'adaptive'))
    rows = []
    for index, run in enumerate(spec.runs()):
        row = ResultRow.for_run(run, horizon=spec.horizon_for(run.complexity))
        row.iterations_completed = run.iterations
        row.wall_seconds = 1.5
        if index == 3:
            row.diverged = True
            row.message = 'DivergenceError: loss is nan'
        else:
            row.rel_error_eval = 0.1 * (index + 1)
        rows.append(row)
    result = SweepResult(Path('results/toy.csv'), rows)
    return spec, SweepRecord.from_sweep(spec, result, config_text='benchmark = shm', workers=2)


class SweepRecordTests(TestCase):
    def test_from_sweep_stores_every_row(self):
        _, record = recorded_sweep()
        self.assertEqual(record.run_count, 4)
        self.assertEqual(record.diverged_count, 1)
        self.assertEqual(record.workers, 2)
        self.assertEqual(record.results.count(), 4)
        self.assertEqual(RunResult.objects.filter(diverged=True).count(), 1)
        self.assertEqual(str(record), 'shm sweep (4 runs) -> results/toy.csv')
        self.assertIn('run_count=4', repr(record))

    def test_rows_keep_their_values(self):
        spec, record = recorded_sweep()
        first = record.results.get(run_id=spec.runs()[0].run_id)
        self.assertEqual(first.training_points, 256)
        self.assertEqual(first.rel_error_eval, 0.1)
        self.assertEqual(first.wall_seconds, 1.5)
        self.assertIsNone(first.residual_trace)
        self.assertEqual(str(first), first.run_id)
        failed = record.results.get(diverged=True)
        self.assertIsNone(failed.rel_error_eval)
        self.assertEqual(failed.complexity, 2)

    def test_ordering(self):
        _, older = recorded_sweep()
        _, newer = recorded_sweep()
        SweepRecord.objects.filter(pk=older.pk).update(created_at=timezone.now() - timedelta(hours=1))
        self.assertEqual(list(SweepRecord.objects.all()), [newer, older])
        self.assertEqual(list(older.results.values_list('complexity', flat=True)), [1, 1, 2, 2])

    def test_deleting_sweep_removes_results(self):
        _, record = recorded_sweep()
        record.delete()
        self.assertFalse(RunResult.objects.exists())


class AdminTests(TestCase):
    def setUp(self):
        self.admin = User.objects.create_superuser('admin', 'admin@example.com', 'pass')
        self.client.force_login(self.admin)
        _, self.record = recorded_sweep()

    def test_sweep_changelist_and_detail(self):
        resp = self.client.get(reverse('admin:experiments_sweeprecord_changelist'))
        self.assertEqual(resp.status_code, 200)
        self.assertContains(resp, 'results/toy.csv')
        resp = self.client.get(reverse('admin:experiments_sweeprecord_change', args=[self.record.pk]))
        self.assertEqual(resp.status_code, 200)
        self.assertContains(resp, 'shm-c1-s0-d2-w64-lr0.001-mlp-uniform')

    def test_run_results_filter(self):
        resp = self.client.get(reverse('admin:experiments_runresult_changelist'), {'diverged__exact': '1'})
        self.assertEqual(resp.status_code, 200)
        self.assertContains(resp, 'shm-c2-s0-d2-w64-lr0.001-mlp-adaptive')
        self.assertNotContains(resp, 'shm-c1-s0-d2-w64-lr0.001-mlp-uniform')
