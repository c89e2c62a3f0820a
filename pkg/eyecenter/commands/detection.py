"""
Detection commands
detect (cascade pipeline) and handcrafted (voting detector)
"""

import click

from eyecenter.commands.common import CliState, annotation_options, pass_state
from eyecenter.decorators import audit_log
from eyecenter.repositories import dumps_detections
from eyecenter.services.detection_service import PipelineConfig
from eyecenter.services.evaluation_service import stage_histogram


@audit_log("Detections written")
def write_detections(state: CliState, results, output):
    return str(state.app.annotation_repo.save_detections(results, output))


def report(state: CliState, results, output):
    """Detections go to the output file with a summary on stdout, or to stdout"""
    if output:
        write_detections(state, results, output)
    elif state.output_format != 'json':
        click.echo(dumps_detections(results), nl=False)
        return
    histogram = stage_histogram(results)
    stages = ", ".join(f"{k}={v}" for k, v in sorted(histogram.items()))
    state.emit(f"Detected {len(results)} images ({stages or 'no eyes'})",
               {'images': len(results), 'stages': histogram, 'output': output,
                'results': [r.to_dict() for r in results]})


@click.command()
@click.option('--model', required=True, type=click.Path(dir_okay=False), help='Trained cascade model file')
@annotation_options
@click.option('--output', type=click.Path(dir_okay=False), help='Detections file (default: stdout)')
@click.option('--overlay-dir', type=click.Path(file_okay=False), help='Write overlay images to this directory')
@click.option('--no-refine', is_flag=True, default=False, help='Skip circle refinement of open eyes')
@pass_state
def detect(state: CliState, model, annotations, annotation_format, output, overlay_dir, no_refine):
    """Detect eye centers with a trained cascade"""
    app = state.app
    cascade = app.model_repo.load(model)
    items = app.dataset_service.load_items(annotations, annotation_format, threads=state.threads)

    service = app.detection_service
    cfg = None
    if no_refine:
        cfg = PipelineConfig(service.pipeline_cfg.refine_threshold, service.pipeline_cfg.regress_threshold,
                             use_refinement=False)
    results = service.detect_many(cascade, items, threads=state.threads, cfg=cfg)

    if overlay_dir:
        app.image_repo.save_overlays([(image, r) for (image, _), r in zip(items, results)], overlay_dir)
    report(state, results, output)


@click.command()
@annotation_options
@click.option('--output', type=click.Path(dir_okay=False), help='Detections file (default: stdout)')
@click.option('--overlay-dir', type=click.Path(file_okay=False), help='Write overlay images to this directory')
@pass_state
def handcrafted(state: CliState, annotations, annotation_format, output, overlay_dir):
    """Detect eye centers with the hand-crafted voting detector"""
    app = state.app
    items = app.dataset_service.load_items(annotations, annotation_format, threads=state.threads)
    results = app.detection_service.handcrafted_many(items, threads=state.threads)

    if overlay_dir:
        app.image_repo.save_overlays([(image, r) for (image, _), r in zip(items, results)], overlay_dir)
    report(state, results, output)
