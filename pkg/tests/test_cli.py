"""
Tests for the command line

Exit codes, --config bundles and the synth / handcrafted / evaluate / train
round trip on a small rendered corpus.
"""

import json
import logging

import pytest

from eyecenter.commands import run
from eyecenter.commands.evaluation import parse_model_specs
from eyecenter.repositories import dumps_model, loads_detections
from eyecenter.services.synthesis_service import SynthesisService
from eyecenter.utils import EXIT_DATA, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, UsageError
from tests.helpers import constant_model


def cli(*args):
    return run(['--env', 'testing', *args])


@pytest.fixture
def corpus_dir(tmp_path):
    """Three rendered faces written by the synth command"""
    out = tmp_path / 'corpus'
    assert cli('synth', '--output', str(out), '--count', '3', '--seed', '4') == EXIT_OK
    return out


@pytest.mark.smoke
class TestGlobalBehaviour:
    """Tests for help, usage errors and --config"""

    def test_help(self, capsys):
        assert run(['--help']) == EXIT_OK
        assert 'synth' in capsys.readouterr().out

    def test_unknown_command(self):
        assert cli('frobnicate') == EXIT_USAGE

    def test_missing_required_flag(self):
        assert cli('synth') == EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        assert run(['--config', str(tmp_path / 'absent.json'), 'synth', '--output', str(tmp_path)]) == EXIT_USAGE

    def test_config_file_must_be_json(self, tmp_path):
        bad = tmp_path / 'bad.json'
        bad.write_text('{not json')
        assert run(['--config', str(bad), 'synth', '--output', str(tmp_path)]) == EXIT_USAGE

    def test_config_bundle_supplies_flags(self, tmp_path, capsys):
        bundle = tmp_path / 'flags.json'
        bundle.write_text(json.dumps({'env': 'testing', 'format': 'json',
                                      'synth': {'count': 2, 'test-fraction': 0.5}}))
        assert run(['--config', str(bundle), 'synth', '--output', str(tmp_path / 'c')]) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert (summary['count'], summary['train'], summary['test']) == (2, 1, 1)

    def test_explicit_flags_win_over_the_bundle(self, tmp_path, capsys):
        bundle = tmp_path / 'flags.json'
        bundle.write_text(json.dumps({'synth': {'count': 2}}))
        args = ['--config', str(bundle), '--env', 'testing', '--format', 'json',
                'synth', '--output', str(tmp_path / 'c'), '--count', '3']
        assert run(args) == EXIT_OK
        assert json.loads(capsys.readouterr().out)['count'] == 3

    def test_internal_error_is_published_as_a_system_event(self, tmp_path, monkeypatch, caplog):
        def broken(*args, **kwargs):
            raise RuntimeError('disk on fire')

        monkeypatch.setattr(SynthesisService, 'generate_corpus', broken)
        with caplog.at_level(logging.ERROR, logger='eyecenter.events'):
            assert cli('synth', '--output', str(tmp_path / 'c')) == EXIT_INTERNAL
        messages = [r.getMessage() for r in caplog.records if r.name == 'eyecenter.events']
        assert any('System Error: RuntimeError' in m and 'disk on fire' in m for m in messages)

    def test_data_errors_are_not_system_events(self, tmp_path, caplog):
        with caplog.at_level(logging.ERROR, logger='eyecenter.events'):
            assert cli('handcrafted', '--annotations', str(tmp_path / 'absent.txt')) == EXIT_DATA
        assert not [r for r in caplog.records if r.name == 'eyecenter.events']


class TestSynthCommand:
    """Tests for synth"""

    def test_writes_a_corpus(self, corpus_dir):
        for name in ('annotations.txt', 'manifest.json', 'train.txt', 'test.txt'):
            assert (corpus_dir / name).exists()
        assert len(list((corpus_dir / 'images').glob('*.png'))) == 3

    def test_same_seed_same_digest(self, tmp_path, capsys):
        digests = []
        for name in ('a', 'b'):
            assert cli('--format', 'json', 'synth', '--output', str(tmp_path / name), '--count', '2',
                       '--seed', '8') == EXIT_OK
            digests.append(json.loads(capsys.readouterr().out)['digest'])
        assert digests[0] == digests[1]

    @pytest.mark.parametrize('flags', [
        ['--closure', '0.8,0.4'],
        ['--interocular', 'wide'],
        ['--iris-radius-frac', '0.9'],
        ['--test-fraction', '1.0'],
    ])
    def test_invalid_parameters(self, tmp_path, flags):
        assert cli('synth', '--output', str(tmp_path), *flags) == EXIT_USAGE


@pytest.mark.integration
class TestDetectAndEvaluate:
    """Tests for handcrafted, detect and evaluate"""

    def test_handcrafted_then_evaluate(self, corpus_dir, tmp_path, capsys):
        detections = tmp_path / 'detections.txt'
        annotations = str(corpus_dir / 'annotations.txt')
        assert cli('handcrafted', '--annotations', annotations, '--output', str(detections),
                   '--overlay-dir', str(tmp_path / 'overlays')) == EXIT_OK
        results = loads_detections(detections.read_text())
        assert len(results) == 3
        assert len(list((tmp_path / 'overlays').glob('*.png'))) == 3
        capsys.readouterr()

        assert cli('--format', 'json', 'evaluate', '--annotations', annotations,
                   '--predictions', str(detections), '--thresholds', '0.05,0.25',
                   '--curve', str(tmp_path / 'curve.txt')) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['thresholds'] == [0.05, 0.25]
        assert report['methods'][0]['name'] == 'predictions'
        assert (tmp_path / 'curve.txt').read_text().startswith('# threshold predictions')

    def test_handcrafted_to_stdout(self, corpus_dir, capsys):
        assert cli('handcrafted', '--annotations', str(corpus_dir / 'annotations.txt')) == EXIT_OK
        assert capsys.readouterr().out.startswith('eyecenter-detections 1')

    def test_evaluate_needs_predictions_or_model(self, corpus_dir):
        assert cli('evaluate', '--annotations', str(corpus_dir / 'annotations.txt')) == EXIT_USAGE

    def test_evaluate_named_models(self, corpus_dir, tmp_path, capsys):
        for name in ('manual', 'auto'):
            (tmp_path / f'{name}.model').write_text(dumps_model(constant_model()))
        capsys.readouterr()
        assert cli('--format', 'json', 'evaluate', '--annotations', str(corpus_dir / 'annotations.txt'),
                   '--model', f"manual={tmp_path / 'manual.model'}", '--model', f"auto={tmp_path / 'auto.model'}",
                   '--methods', 'regressor,handcrafted', '--thresholds', '0.25') == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert [m['name'] for m in report['methods']] == ['manual:regressor', 'auto:regressor', 'handcrafted']

    def test_repeated_model_name(self, corpus_dir, tmp_path):
        assert cli('evaluate', '--annotations', str(corpus_dir / 'annotations.txt'),
                   '--model', f"a={tmp_path / 'x.model'}", '--model', f"a={tmp_path / 'y.model'}") == EXIT_USAGE

    def test_bad_thresholds(self, corpus_dir, tmp_path):
        assert cli('evaluate', '--annotations', str(corpus_dir / 'annotations.txt'),
                   '--predictions', str(tmp_path / 'p.txt'), '--thresholds', '0.1,-1') == EXIT_USAGE

    def test_missing_model_file(self, corpus_dir, tmp_path):
        assert cli('detect', '--model', str(tmp_path / 'none.model'),
                   '--annotations', str(corpus_dir / 'annotations.txt')) == EXIT_DATA

    def test_damaged_model_file(self, corpus_dir, tmp_path):
        model = tmp_path / 'damaged.model'
        model.write_text('eyecenter-cascade 1\nhog 100.0\n')
        assert cli('detect', '--model', str(model),
                   '--annotations', str(corpus_dir / 'annotations.txt')) == EXIT_DATA

    def test_unknown_annotation_format(self, corpus_dir):
        assert cli('handcrafted', '--annotations', str(corpus_dir / 'annotations.txt'),
                   '--annotation-format', 'csv') == EXIT_USAGE

    @pytest.mark.e2e
    @pytest.mark.slow
    def test_train_then_detect(self, corpus_dir, tmp_path, capsys):
        model = tmp_path / 'cascade.model'
        annotations = str(corpus_dir / 'annotations.txt')
        assert cli('train', '--annotations', annotations, '--output', str(model), '--levels', '2',
                   '--trees', '4', '--depth', '3', '--oversample', '3',
                   '--trace', str(tmp_path / 'trace.json')) == EXIT_OK
        assert model.read_text().startswith('eyecenter-cascade 1')
        trace = json.loads((tmp_path / 'trace.json').read_text())
        assert len(trace['level_rms']) == 2
        capsys.readouterr()

        assert cli('--format', 'json', 'detect', '--model', str(model), '--annotations', annotations,
                   '--no-refine') == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary['images'] == 3
        assert 'refined' not in summary['stages']


class TestParseModelSpecs:
    """Tests for parse_model_specs"""

    def test_single_unnamed_model(self):
        assert parse_model_specs(['runs/cascade.model']) == {'': 'runs/cascade.model'}

    def test_names_and_file_stems(self):
        specs = ['manual=runs/m.model', 'runs/auto_flip.model']
        assert parse_model_specs(specs) == {'manual': 'runs/m.model', 'auto_flip': 'runs/auto_flip.model'}

    @pytest.mark.parametrize('specs', [['=a.model'], ['m='], ['m=a.model', 'm=b.model'], ['x/a.model', 'y/a.model']])
    def test_rejects(self, specs):
        with pytest.raises(UsageError):
            parse_model_specs(specs)
