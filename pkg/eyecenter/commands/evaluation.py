"""
Evaluation command
Accuracy of stored predictions or of detector variants against ground truth
"""

from pathlib import Path
from typing import Dict, Sequence

import click

from eyecenter.commands.common import CliState, annotation_options, pass_state
from eyecenter.services.evaluation_service import METHODS, parse_thresholds
from eyecenter.utils import UsageError


def parse_model_specs(specs: Sequence[str]) -> Dict[str, str]:
    """
    Label -> path for --model values

    'name=path' sets the label. A lone unnamed model keeps an empty label;
    with several, unnamed ones are labelled by file stem.

    Raises:
        UsageError: for an empty name or path, or a repeated label
    """
    labelled: Dict[str, str] = {}
    for spec in specs:
        name, sep, path = spec.partition('=')
        if not sep:
            name, path = ('' if len(specs) == 1 else Path(spec).stem), spec
        elif not name.strip() or not path.strip():
            raise UsageError(f"--model expects PATH or NAME=PATH, got '{spec}'")
        name = name.strip()
        if name in labelled:
            raise UsageError(f"model name '{name}' given twice")
        labelled[name] = path.strip()
    return labelled


@click.command()
@annotation_options
@click.option('--predictions', type=click.Path(dir_okay=False), help='Detections file to score')
@click.option('--model', 'models', multiple=True,
              help='Trained cascade to run and score, as PATH or NAME=PATH (repeatable)')
@click.option('--methods', default=','.join(METHODS), show_default=True,
              help='Comma-separated detector variants when scoring models')
@click.option('--thresholds', default='0.025,0.05,0.1,0.25', show_default=True,
              help='Comma-separated normalized-error thresholds')
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), help='Also write the report to a file')
@click.option('--curve', type=click.Path(dir_okay=False), help='Write columnar accuracy curves for plotting')
@pass_state
def evaluate(state: CliState, annotations, annotation_format, predictions, models, methods, thresholds,
             report_path, curve):
    """Score eye-center predictions against ground-truth centers"""
    app = state.app
    thresholds = parse_thresholds(thresholds)
    if predictions and models:
        raise UsageError("use either --predictions or --model, not both")

    if predictions:
        truth = app.dataset_service.load_annotations(annotations, annotation_format)
        detections = app.annotation_repo.load_detections(predictions)
        report = app.evaluation_service.evaluate_predictions(detections, truth, thresholds)
    else:
        names = [m.strip() for m in methods.split(',') if m.strip()]
        if not models:
            raise UsageError("evaluate needs --predictions or --model")
        loaded = {label: app.model_repo.load(path) for label, path in parse_model_specs(models).items()}
        cascades = loaded[''] if list(loaded) == [''] else loaded
        items = app.dataset_service.load_items(annotations, annotation_format, threads=state.threads)
        report = app.evaluation_service.compare_methods(cascades, items, names, thresholds,
                                                        threads=state.threads)

    text = report.to_text()
    if report_path:
        app.model_repo.write_text(report_path, text)
    if curve:
        app.model_repo.write_text(curve, report.curve_table())
    state.emit(text.rstrip("\n"), report.to_dict())
