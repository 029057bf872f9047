#!/usr/bin/env python3
"""
Tests for the command-line surface, configuration and result files
"""
import csv
import json
import sys
from pathlib import Path

import pytest

# Add project root and src to path
sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(Path(__file__).parent / 'src'))

import main
from errors import ConfigError
from results_writer import format_value, meta_path
from settings import DEFAULTS, load_config, validate_config


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv('BURGERS_JOBS', raising=False)
    monkeypatch.delenv('BURGERS_LOG_LEVEL', raising=False)


def _read_csv(path):
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.reader(f))


def test_parse_profile_defaults():
    cfg = main.parse_args(['profile', '--alpha', '1', '--epsilon', '0.1'])
    assert cfg.command == 'profile'
    assert (cfg.alpha, cfg.k, cfg.eps) == (1.0, 0.0, 0.1)
    assert cfg.n == 'auto' and cfg.resolve_n(0.1) == 401
    assert cfg.m == 4 and cfg.nu == 1e-3
    assert cfg.format == 'csv'
    assert cfg.out_path == 'results/profile.csv'


def test_parse_rejects_negative_epsilon():
    with pytest.raises(ConfigError):
        main.parse_args(['spectrum', '--epsilon', '-0.1'])
    assert main.main(['spectrum', '--epsilon', '-0.1']) == 2


def test_parse_sweep_list():
    cfg = main.parse_args(['sweep', '--epsilons', '0.3,0.2,0.1', '--m', '2'])
    assert cfg.eps == [0.3, 0.2, 0.1]
    assert cfg.m == 2


def test_usage_error_exits_with_two():
    with pytest.raises(SystemExit) as info:
        main.parse_args(['bogus'])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main.parse_args(['profile', '--n', 'many'])
    assert info.value.code == 2


def test_environment_overrides_jobs(monkeypatch):
    monkeypatch.setenv('BURGERS_JOBS', '3')
    assert main.parse_args(['sweep', '--jobs', '1']).jobs == 3


def test_profile_csv(tmp_path):
    out = tmp_path / 'profile.csv'
    assert main.main(['profile', '--epsilon', '0.1', '--out', str(out)]) == 0
    rows = _read_csv(out)
    assert rows[0] == ['x', 'U', 'Ux', 'Uxx', 'residual']
    assert len(rows) == 402
    assert rows[1][0] == '-1'
    assert rows[-1][0] == '1'

    meta = json.loads(meta_path(str(out)).read_text())
    assert meta['config']['command'] == 'profile'
    assert 'version' in meta and 'wall_time_seconds' in meta


def test_outputs_are_deterministic(tmp_path):
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    for out in (first, second):
        assert main.main(['steady', '--epsilon', '0.2', '--out', str(out)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert _read_csv(first)[0] == ['x', 'u_newton', 'U_composite', 'diff']


def test_only_output_and_meta_are_written(tmp_path):
    out = tmp_path / 'spectrum.csv'
    assert main.main(['spectrum', '--epsilon', '0.2', '--m', '3', '--out', str(out)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ['spectrum.csv', 'spectrum.csv.meta.json']
    rows = _read_csv(out)
    assert rows[0] == ['eps', 'index', 'lambda']
    assert [r[1] for r in rows[1:]] == ['1', '2', '3']


def test_spectrum_below_precision_floor_fails(tmp_path, capsys):
    out = tmp_path / 'spectrum.csv'
    assert main.main(['spectrum', '--epsilon', '0.01', '--out', str(out)]) == 1
    assert 'PrecisionFloorError' in capsys.readouterr().err


def test_sweep_outputs(tmp_path):
    out = tmp_path / 'sweep.csv'
    assert main.main(['sweep', '--epsilons', '0.3,0.2,0.1', '--m', '2', '--out', str(out)]) == 0
    rows = _read_csv(out)
    assert rows[0] == ['eps', 'lambda1', 'lambda2']
    assert len(rows) == 4

    out_json = tmp_path / 'sweep.json'
    assert main.main(['sweep', '--epsilons', '0.3,0.2,0.1', '--m', '2', '--format', 'json',
                      '--jobs', '2', '--out', str(out_json)]) == 0
    payload = json.loads(out_json.read_text())
    assert payload['fit']['slope'] < 0
    assert [r['status'] for r in payload['rows']] == ['ok', 'ok', 'ok']


def test_evolve_outputs(tmp_path):
    out = tmp_path / 'evolve.csv'
    assert main.main(['evolve', '--epsilon', '0.3', '--t-end', '2', '--out', str(out)]) == 0
    rows = _read_csv(out)
    assert rows[0] == ['t', 'deviation']
    assert len(rows) == 22
    assert float(rows[1][1]) == pytest.approx(1e-3, rel=1e-10)


def test_report_bundle(tmp_path):
    out = tmp_path / 'report.json'
    code = main.main(['report', '--alpha', '1', '--epsilon', '0.25', '--out', str(out)])
    bundle = json.loads(out.read_text())
    ledger = bundle['ledger']
    assert ledger['stationary_residual'] == 'pass'
    assert ledger['decay_vs_eigenvalue'] == 'pass'
    assert bundle['decay']['reference'] == 'steady'
    assert all(s in ('pass', 'fail') or s.startswith('skipped(') for s in ledger.values())
    assert code == (0 if all(s != 'fail' for s in ledger.values()) else 1)


def test_format_value():
    assert format_value(0.1) == '0.10000000000000001'
    assert format_value(3) == '3'
    assert format_value('ok') == 'ok'


def test_config_file_merges_over_defaults(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text("profile:\n  epsilon: 0.2\nspectrum:\n  m: 2\n")
    config = load_config(str(path))
    assert config['profile']['epsilon'] == 0.2
    assert config['profile']['alpha'] == DEFAULTS['profile']['alpha']
    assert config['spectrum']['m'] == 2
    assert validate_config(config) == []

    cfg = main.parse_args(['spectrum', '--config', str(path)])
    assert cfg.eps == 0.2 and cfg.m == 2


def test_validate_config_collects_every_problem():
    config = load_config(None)
    config['profile']['epsilon'] = -1
    config['spectrum']['m'] = 0
    config['output']['format'] = 'xml'
    problems = validate_config(config)
    assert len(problems) == 3


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.yaml'))
    assert main.main(['profile', '--config', str(tmp_path / 'missing.yaml')]) == 2


def test_report_honors_composite_reference(tmp_path):
    out = tmp_path / 'report.json'
    code = main.main(['report', '--epsilon', '0.3', '--reference', 'composite', '--out', str(out)])
    bundle = json.loads(out.read_text())
    assert bundle['decay']['reference'] == 'composite'
    # the composite misses the boundary data by far more than nu, so nothing decays
    assert bundle['ledger']['decay_vs_eigenvalue'] == 'fail'
    assert code == 1
