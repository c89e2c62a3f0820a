"""
Quick verification script for a generated synthetic corpus
Re-hashes every image against manifest.json and checks the annotation files
"""

import os
import sys
from collections import Counter

import click
from dotenv import load_dotenv

# Add parent directory to path to import the toolkit
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from eyecenter import create_app
from eyecenter.services.synthesis_service import pixels_digest
from eyecenter.utils import DataError

load_dotenv()


@click.command()
@click.argument('corpus_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--env', 'env_name', default=None, help='Configuration profile')
def verify_corpus(corpus_dir, env_name):
    """Check that CORPUS_DIR matches its manifest"""
    print("=" * 70)
    print("EYECENTER: Corpus Verification")
    print("=" * 70)

    app = create_app(env_name)
    manifest = app.corpus_repo.load(corpus_dir)
    print(f"Seed:     {manifest.seed}")
    print(f"Images:   {manifest.count}")
    print(f"Digest:   {manifest.digest}")
    splits = Counter(r.split for r in manifest.records)
    print(f"Splits:   train={splits.get('train', 0)} test={splits.get('test', 0)}")
    print()

    problems = []
    for record in manifest.records:
        try:
            image = app.image_repo.load(os.path.join(corpus_dir, record.image), record.image_id)
        except DataError as e:
            problems.append(f"{record.image_id}: {e.message}")
            continue
        if pixels_digest(image) != record.pixels_sha256:
            problems.append(f"{record.image_id}: pixels differ from the manifest")

    annotations = app.annotation_repo.load(os.path.join(corpus_dir, manifest.annotations))
    annotated = {a.image_id for a in annotations}
    for record in manifest.records:
        if record.image_id not in annotated:
            problems.append(f"{record.image_id}: missing from {manifest.annotations}")

    for split in ('train', 'test'):
        listed = [a.image_id for a in app.annotation_repo.load(os.path.join(corpus_dir, f"{split}.txt"))]
        if listed != list(manifest.split_ids(split)):
            problems.append(f"{split}.txt does not match the manifest split")

    if problems:
        print(f"Found {len(problems)} problem(s):")
        for problem in problems:
            print(f"  - {problem}")
        sys.exit(2)
    print("All images and annotation files match the manifest.")


if __name__ == "__main__":
    verify_corpus()
