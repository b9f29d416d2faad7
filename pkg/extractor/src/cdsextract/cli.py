"""Command-line front end for the extractor.

Exit codes match the selection CLI: 0 success, 2 configuration
problems, 3 IO or data problems.
"""

from __future__ import annotations

import sys

import click

from .cdsf import TensorFormatError
from .extract import extract
from .model import MODELS, ModelError
from .sources import SourceError


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.command()
@click.argument("source")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="output directory for the CDSF files")
@click.option("--model", "model_id", type=click.Choice(MODELS),
              default="resnet18", show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--image-size", type=int, default=32, show_default=True,
              help="images are resized to this square size")
@click.option("--seed", type=int, default=0, show_default=True,
              help="weight initialization seed")
@click.option("--limit", type=int, default=None,
              help="extract at most this many images")
@click.option("--data-root", default="data", show_default=True,
              help="root directory for named datasets")
def main(source, out_dir, model_id, batch_size, image_size, seed, limit,
         data_root):
    """Extract features, labels and softmax probs from SOURCE.

    SOURCE is either a directory with one subdirectory per class, or a
    dataset name (cifar10, cifar100) already present under --data-root.
    Writes features.cdsf, labels.cdsf, probs.cdsf and manifest.json to
    the --out directory, then prints the manifest.
    """
    # order matters: the data errors subclass ValueError but mean exit 3
    try:
        manifest = extract(source, model_id, out_dir, batch_size, seed=seed,
                           image_size=image_size, limit=limit,
                           data_root=data_root)
    except (SourceError, TensorFormatError) as exc:
        _fail(str(exc), 3)
    except (ModelError, ValueError) as exc:
        _fail(str(exc), 2)
    except OSError as exc:
        _fail(str(exc), 3)
    click.echo(manifest.to_json(), nl=False)


if __name__ == "__main__":
    main()
