# Generated by Django 5.2.10 on 2026-10-18 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SweepRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('benchmark', models.CharField(choices=[('shm', 'Simple harmonic motion'), ('heat', 'Heat equation (method of lines)')], max_length=16)),
                ('config_text', models.TextField(help_text='The sweep config document as given')),
                ('csv_path', models.CharField(max_length=512)),
                ('workers', models.PositiveIntegerField(default=1)),
                ('run_count', models.PositiveIntegerField(default=0)),
                ('diverged_count', models.PositiveIntegerField(default=0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Sweep',
                'verbose_name_plural': 'Sweeps',
                'db_table': 'sweep_records',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='RunResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_id', models.CharField(max_length=128)),
                ('complexity', models.IntegerField()),
                ('horizon', models.FloatField(blank=True, null=True)),
                ('seed', models.IntegerField(default=0)),
                ('depth', models.PositiveSmallIntegerField()),
                ('width', models.PositiveSmallIntegerField()),
                ('learning_rate', models.FloatField()),
                ('arch', models.CharField(choices=[('mlp', 'MLP'), ('resnet', 'ResNet')], max_length=16)),
                ('formulation', models.CharField(choices=[('uniform', 'Uniform'), ('adaptive', 'Adaptive (min-max)')], max_length=16)),
                ('iterations', models.PositiveIntegerField()),
                ('training_points', models.PositiveIntegerField(help_text='D, number of collocation points')),
                ('rel_error_eval', models.FloatField(blank=True, null=True)),
                ('rel_error_train', models.FloatField(blank=True, null=True)),
                ('rel_error_ic', models.FloatField(blank=True, null=True)),
                ('residual_loss', models.FloatField(blank=True, null=True)),
                ('ic_loss', models.FloatField(blank=True, null=True)),
                ('residual_trace', models.FloatField(blank=True, null=True)),
                ('residual_trace_stderr', models.FloatField(blank=True, null=True)),
                ('ic_trace', models.FloatField(blank=True, null=True)),
                ('ic_trace_stderr', models.FloatField(blank=True, null=True)),
                ('iterations_completed', models.PositiveIntegerField(default=0)),
                ('wall_seconds', models.FloatField(blank=True, null=True)),
                ('diverged', models.BooleanField(default=False)),
                ('message', models.TextField(blank=True, default='')),
                ('sweep', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='experiments.sweeprecord')),
            ],
            options={
                'verbose_name': 'Run Result',
                'verbose_name_plural': 'Run Results',
                'db_table': 'run_results',
                'ordering': ['sweep', 'complexity', 'seed', 'run_id'],
            },
        ),
    ]
