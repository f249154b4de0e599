import numpy as np
import pytest

from isap.schemas.experiment import build_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config(tmp_path):
    """Small enough for a full pipeline in seconds: 32 px rasters, 8 anchors, one epoch."""
    return build_config(
        {
            "experiment": {"seed": 7, "scale": 0.002, "output_dir": str(tmp_path / "run")},
            "raster": {"size": 32},
            "anchors": {"count": 8},
            "model": {"flow_layers": 2, "head_hidden": 16, "single_head_hidden": 32},
            "training": {"epochs": 1, "batch_size": 16},
            "ensemble": {"members": 2, "eval_sizes": [2]},
            "evaluation": {"top_k": [1, 5], "histogram_bins": 5},
        }
    )
