"""
Synthesis command
Renders a deterministic synthetic corpus with exact ground truth
"""

import click

from eyecenter.commands.common import CliState, parse_range, pass_state
from eyecenter.services.synthesis_service import SynthParams


@click.command()
@click.option('--output', required=True, type=click.Path(file_okay=False), help='Corpus directory to write')
@click.option('--count', type=click.IntRange(min=1), default=100, show_default=True, help='Number of images')
@click.option('--seed', type=int, default=None, help='Corpus seed (default: the global --seed)')
@click.option('--test-fraction', type=click.FloatRange(0.0, 1.0, max_open=True), default=0.2, show_default=True)
@click.option('--width', type=int, default=384, show_default=True)
@click.option('--height', type=int, default=286, show_default=True)
@click.option('--interocular', default='90,110', show_default=True, help="Interocular distance range 'lo,hi' px")
@click.option('--iris-radius-frac', type=float, default=0.2, show_default=True, help='Iris radius as a fraction of E')
@click.option('--gaze', default='-0.1,0.1', show_default=True, help="Gaze offset range as a fraction of E")
@click.option('--closure', default='0.45,0.65', show_default=True, help="Eye opening height/width range")
@click.option('--roll', default='0,0', show_default=True, help="Head roll range in degrees")
@click.option('--jitter', type=float, default=10.0, show_default=True, help='Face position jitter in px')
@click.option('--noise', type=float, default=0.0, show_default=True, help='Gaussian noise sigma (gray levels)')
@click.option('--blur', type=float, default=0.0, show_default=True, help='Gaussian blur sigma in px')
@click.option('--illumination', type=float, default=0.0, show_default=True,
              help='Brightness change across the image width')
@pass_state
def synth(state: CliState, output, count, seed, test_fraction, width, height, interocular, iris_radius_frac,
          gaze, closure, roll, jitter, noise, blur, illumination):
    """Render a synthetic face corpus"""
    seed = state.seed if seed is None else seed
    try:
        params = SynthParams(
            image_size=(width, height),
            interocular_range=parse_range(interocular, 'interocular'),
            iris_radius_frac=iris_radius_frac,
            gaze_offset_range=parse_range(gaze, 'gaze'),
            closure_range=parse_range(closure, 'closure'),
            roll_range_deg=parse_range(roll, 'roll'),
            face_jitter_px=jitter,
            noise_sigma=noise,
            blur_sigma=blur,
            illumination_gradient=illumination,
            rng_seed=seed,
        )
    except ValueError as e:
        raise click.BadParameter(str(e))
    manifest = state.app.synthesis_service.generate_corpus(output, params, count, seed, test_fraction,
                                                           threads=state.threads)
    state.emit(f"Rendered {manifest.count} images to {output} "
               f"({len(manifest.split_ids('train'))} train, {len(manifest.split_ids('test'))} test); "
               f"digest {manifest.digest}",
               {'count': manifest.count, 'digest': manifest.digest, 'output': output,
                'train': len(manifest.split_ids('train')), 'test': len(manifest.split_ids('test'))})
