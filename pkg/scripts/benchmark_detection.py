"""
Per-image detection timing
Runs the cascade pipeline (or the voting detector alone) over an annotated
set and reports wall time per image, excluding image loading
"""

import os
import statistics
import sys
import time

import click
from dotenv import load_dotenv

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from eyecenter import create_app

load_dotenv()


@click.command()
@click.option('--annotations', required=True, type=click.Path(exists=True), help='Native annotation file')
@click.option('--model', type=click.Path(exists=True, dir_okay=False), help='Cascade model (omit for the voting detector)')
@click.option('--repeat', type=click.IntRange(min=1), default=3, show_default=True, help='Passes over the set')
@click.option('--env', 'env_name', default=None, help='Configuration profile')
def benchmark(annotations, model, repeat, env_name):
    """Time detection per image"""
    app = create_app(env_name, log_level='WARNING')
    items = app.dataset_service.load_items(annotations)
    if not items:
        print("No images could be loaded.")
        sys.exit(2)
    cascade = app.model_repo.load(model) if model else None

    timings = []
    for _ in range(repeat):
        for image, annotation in items:
            start = time.perf_counter()
            if cascade is None:
                app.detection_service.handcrafted_result(image, annotation)
            else:
                app.detection_service.detect(cascade, image, annotation)
            timings.append(time.perf_counter() - start)

    print("=" * 70)
    print(f"Detector: {'cascade pipeline' if cascade else 'voting detector'}")
    print(f"Images:   {len(items)} x {repeat} passes")
    print(f"Mean:     {statistics.mean(timings) * 1000:.2f} ms/image")
    print(f"Median:   {statistics.median(timings) * 1000:.2f} ms/image")
    print(f"Max:      {max(timings) * 1000:.2f} ms/image")
    print("=" * 70)


if __name__ == "__main__":
    benchmark()
