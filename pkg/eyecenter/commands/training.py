"""
Training commands
train (annotated corpus), auto-annotate (voting detector labels) and
auto-train (both in sequence)
"""

import json
from dataclasses import replace
from pathlib import Path

import click

from eyecenter.commands.common import CliState, annotation_options, pass_state
from eyecenter.decorators import audit_log


def training_options(f):
    """Cascade size overrides of the configured defaults"""
    for name, kind, text in reversed((
        ('levels', int, 'Cascade levels'),
        ('trees', int, 'Trees per level'),
        ('depth', int, 'Tree depth in node levels'),
        ('oversample', int, 'Initial shapes per training image'),
        ('shrinkage', float, 'Learning rate applied to leaf values'),
    )):
        f = click.option(f'--{name}', type=kind, default=None, help=text)(f)
    return f


def train_config(state: CliState, levels, trees, depth, oversample, shrinkage):
    return state.app.config.train_config(
        levels=levels, trees_per_level=trees, tree_depth=depth, oversample=oversample, shrinkage=shrinkage,
        rng_seed=state.seed, threads=state.threads)


@audit_log("Model written")
def save_model(state: CliState, model, output):
    return str(state.app.model_repo.save(model, output))


def save_trace(state: CliState, trace, path):
    state.app.model_repo.write_text(path, json.dumps(trace.to_dict(), indent=2) + "\n")


def training_summary(state: CliState, model, trace, output, extra=None):
    data = {'model': output, 'levels': len(model.levels), 'trees': model.tree_count,
            'initial_rms': trace.initial_rms, 'level_rms': trace.level_rms}
    data.update(extra or {})
    final = trace.level_rms[-1] if trace.level_rms else trace.initial_rms
    state.emit(f"Trained {len(model.levels)} levels ({model.tree_count} trees); "
               f"RMS residual {trace.initial_rms:.4f} -> {final:.4f}; model written to {output}", data)


@click.command()
@annotation_options
@click.option('--output', required=True, type=click.Path(dir_okay=False), help='Model file to write')
@click.option('--flip', is_flag=True, default=False, help='Add horizontally mirrored copies of every image')
@click.option('--trace', type=click.Path(dir_okay=False), help='Write the training residual trace as JSON')
@training_options
@pass_state
def train(state: CliState, annotations, annotation_format, output, flip, trace,
          levels, trees, depth, oversample, shrinkage):
    """Train a cascade on manually annotated images"""
    app = state.app
    cfg = train_config(state, levels, trees, depth, oversample, shrinkage)
    items = app.dataset_service.load_items(annotations, annotation_format, threads=state.threads)
    model, training_trace = app.training_service.train(items, cfg, flip=flip)
    save_model(state, model, output)
    if trace:
        save_trace(state, training_trace, trace)
    training_summary(state, model, training_trace, output, {'images': len(items)})


def save_auto_annotations(state: CliState, result, output):
    """Write accepted annotations; mirrored copies get their images next to the output file"""
    app = state.app
    annotations = []
    flipped_dir = Path(output).resolve().parent / 'flipped'
    for image, annotation in result.items:
        if not annotation.image_path:
            target = app.image_repo.save(image, flipped_dir / f"{annotation.image_id}.png")
            annotation = replace(annotation, image_path=str(target))
        annotations.append(annotation)
    return app.annotation_repo.save(annotations, output)


@click.command('auto-annotate')
@annotation_options
@click.option('--output', required=True, type=click.Path(dir_okay=False), help='Annotation file to write')
@click.option('--flip', is_flag=True, default=False, help='Add horizontally mirrored copies of every image')
@pass_state
def auto_annotate(state: CliState, annotations, annotation_format, output, flip):
    """Label iris centers with the hand-crafted detector"""
    app = state.app
    items = app.dataset_service.load_items(annotations, annotation_format, threads=state.threads)
    result = app.training_service.auto_annotate(items, with_flips=flip, threads=state.threads)
    save_auto_annotations(state, result, output)
    state.emit(f"Annotated {len(result.items)} images, skipped {result.skipped_count}; written to {output}",
               {'annotated': len(result.items), 'skipped': [{'image_id': i, 'reason': r} for i, r in result.skipped],
                'output': output})


@click.command('auto-train')
@annotation_options
@click.option('--output', required=True, type=click.Path(dir_okay=False), help='Model file to write')
@click.option('--flip', is_flag=True, default=False, help='Add horizontally mirrored copies of every image')
@click.option('--trace', type=click.Path(dir_okay=False), help='Write the training residual trace as JSON')
@click.option('--annotations-out', type=click.Path(dir_okay=False), help='Also write the auto-annotations')
@training_options
@pass_state
def auto_train(state: CliState, annotations, annotation_format, output, flip, trace, annotations_out,
               levels, trees, depth, oversample, shrinkage):
    """Auto-annotate images, then train a cascade on the labels"""
    app = state.app
    cfg = train_config(state, levels, trees, depth, oversample, shrinkage)
    items = app.dataset_service.load_items(annotations, annotation_format, threads=state.threads)
    model, training_trace, result = app.training_service.train_from_auto(
        items, cfg, with_flips=flip, threads=state.threads)
    save_model(state, model, output)
    if trace:
        save_trace(state, training_trace, trace)
    if annotations_out:
        save_auto_annotations(state, result, annotations_out)
    training_summary(state, model, training_trace, output,
                     {'annotated': len(result.items), 'skipped': result.skipped_count})
