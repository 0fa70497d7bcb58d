"""Console entry point: crowdseg-server."""

from __future__ import annotations

import logging

import click
import uvicorn

from .app import create_app
from .config import ApiConfig


@click.command()
@click.option("--data-root", required=True, type=click.Path(), help="Storage directory.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8077, show_default=True, type=int)
@click.option("--preseg-provider", default="frangi-v1", show_default=True)
@click.option("--quality-provider", default="heuristic-q1", show_default=True)
@click.option("--max-upload-mib", default=64, show_default=True, type=int)
def main(data_root, host, port, preseg_provider, quality_provider, max_upload_mib):
    """Run the annotation platform server.

    On first start (empty data root) a bootstrap researcher is created and
    its token printed once; keep it safe.
    """
    logging.basicConfig(level=logging.INFO)
    config = ApiConfig(
        data_root=data_root, host=host, port=port,
        preseg_provider=preseg_provider, quality_provider=quality_provider,
        max_upload_bytes=max_upload_mib * 2**20)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


if __name__ == "__main__":
    main()
