import io
import json
import math

import pandas as pd
import pytest

from cli import build_parser, main

SQRT5 = math.sqrt(5)


def _table(out):
    return pd.read_csv(io.StringIO(out))


def test_sync_small(capsys):
    assert main(['sync', '--n', '3', '--k', '1', '--v', '1']) == 0
    row = _table(capsys.readouterr().out).iloc[0]
    assert row['zeta'] == pytest.approx((5 - math.sqrt(21)) / 4, abs=1e-9)
    assert row['eta'] == pytest.approx((-1 + math.sqrt(21)) / 20, abs=1e-9)
    assert row['Sunder'] == 4 and row['Sbar'] == 1
    assert 'seed' in row.index


def test_sync_large(capsys):
    assert main(['sync', '--n', '3', '--k', '-1', '--v', '1']) == 0
    row = _table(capsys.readouterr().out).iloc[0]
    assert row['eta'] == pytest.approx((3 - SQRT5) / 4, abs=1e-9)
    assert row['delta'] == pytest.approx((5 - SQRT5) / 4, abs=1e-9)
    assert row['zeta'] == pytest.approx((1 + SQRT5) / 4, abs=1e-9)


def test_sync_invalid_word_exit_code(capsys):
    assert main(['sync', '--n', '3', '--k', '1', '--v', '0']) == 2
    assert '❌' in capsys.readouterr().err


def test_invalid_index_exit_code(capsys):
    assert main(['sync', '--n', '2', '--k', '1', '--v', '1']) == 2


def test_argparse_errors_exit():
    with pytest.raises(SystemExit) as exc:
        main(['sync', '--n', '3'])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_domain_csv(tmp_path, capsys):
    out = tmp_path / 'omega.csv'
    assert main(['domain', '--alpha', '0.14', '--out', str(out)]) == 0
    df = pd.read_csv(out)
    assert len(df) == 7
    assert set(df['part']) == {'upper', 'lower'}
    assert (df['seed'] == df['seed'].iloc[0]).all()


def test_domain_json_record(capsys):
    assert main(['domain', '--alpha', 'zeta:1,1', '--format', 'json-record']) == 0
    record = json.loads(capsys.readouterr().out)
    assert record['format'] == 'natext-domain'
    assert record['kind'] == 'zeta-small'


def test_domain_svg_requires_out(capsys):
    assert main(['domain', '--alpha', '0.14', '--format', 'svg']) == 2
    assert '--out' in capsys.readouterr().err


def test_domain_verify(capsys):
    code = main(['domain', '--alpha', '0.14', '--verify', '--samples', '5000', '--grid', '128', '--seed', '3'])
    err = capsys.readouterr().err
    assert code == 0
    assert 'verdict=pass' in err


def test_entropy_row(capsys):
    assert main(['entropy', '--alpha', '0.75']) == 0
    row = _table(capsys.readouterr().out).iloc[0]
    assert abs(row['residual_vs_vol']) < 1e-6


def test_conjecture(capsys):
    assert main(['conjecture', '--n', '3', '--alpha', '0.14']) == 0
    out = capsys.readouterr().out
    assert 'CONJECTURE vol_n, n = 3' in out
    assert '✅' in out


def test_expansive(capsys):
    assert main(['expansive', '--alpha', '0.75']) == 0
    out = capsys.readouterr().out
    assert 'PUISSANCE EXPANSIVE' in out
    assert 'r = 1' in out


def test_atlas(tmp_path, capsys):
    out = tmp_path / 'atlas.csv'
    assert main(['atlas', '--levels', '1,-1', '--max-letters', '1', '--max-letter', '2', '--out', str(out)]) == 0
    df = pd.read_csv(out)
    assert {'k', 'v', 'zeta', 'eta'} <= set(df.columns)
    assert 'Fraction couverte' in capsys.readouterr().err


def test_scan(capsys):
    assert main(['scan', '--alphas', '0.14:0.15:2']) == 0
    table = _table(capsys.readouterr().out)
    assert len(table) == 2
    assert (table['product'] - 2 * math.pi ** 2 / 3).abs().max() < 1e-4


@pytest.mark.parametrize("command", ['entropy', 'conjecture', 'expansive'])
def test_domain_settings_reach_builder(monkeypatch, capsys, command):
    import cli
    import natext_domain
    from config import LAB_MASS_TOL, LAB_MAX_ITER, LAB_TIE_TOL

    seen = []
    real = natext_domain.build_domain

    def spy(params, alpha, **kwargs):
        seen.append(kwargs)
        return real(params, alpha, **kwargs)

    monkeypatch.setattr(cli, 'build_domain', spy)
    monkeypatch.setattr(natext_domain, 'build_domain', spy)
    assert main([command, '--alpha', '0.75', '--kmax', '40']) == 0
    capsys.readouterr()
    assert seen
    assert seen[0]['kmax'] == 40
    assert seen[0]['tie_tol'] == LAB_TIE_TOL
    assert seen[0]['mass_tol'] == LAB_MASS_TOL
    assert seen[0]['max_iter'] == LAB_MAX_ITER
