import copy
from typing import Any, Dict

import pytest

from smqtk_attribute_embedding.data.manifest import DatasetManifest
from smqtk_attribute_embedding.data.synthetic import SyntheticSpec, generate_synthetic_dataset
from smqtk_attribute_embedding.model.config import ModelConfig

# Smallest network that still exercises every module: 8 pixel global input,
# 4 pixel local input, c = 4 feature channels, c_a = c_1 = c_2 = c_o = 3.
_TINY_BRANCH = {
    "c_1": 3,
    "c_2": 3,
    "c_o": 3,
    "reduction": 2,
}
TINY_RUN_CONFIG: Dict[str, Any] = {
    "model": {
        "num_attributes": 2,
        "attribute_dim": 3,
        "global_branch": dict(_TINY_BRANCH, backbone={"input_side": 8,
                                                      "block_specs": [[4, 3, 2]]}),
        "local_branch": dict(_TINY_BRANCH, backbone={"input_side": 4,
                                                     "block_specs": [[4, 3, 2]]}),
        "localization": {"min_side": 2, "local_input_side": 4},
    },
    "train": {
        "epochs_stage1": 2,
        "epochs_stage2": 2,
        "batch_size": 2,
        "triplets_per_epoch": 4,
        "lr_global_s1": 0.01,
        "lr_global_s2": 0.01,
        "lr_local_s2": 0.01,
    },
}


@pytest.fixture
def tiny_run_config() -> Dict[str, Any]:
    """ JSON-compliant run configuration of the tiny network. """
    return copy.deepcopy(TINY_RUN_CONFIG)


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    return ModelConfig.from_config(copy.deepcopy(TINY_RUN_CONFIG["model"]))


@pytest.fixture(scope='session')
def tiny_dataset(tmp_path_factory: Any) -> DatasetManifest:
    """
    Two attributes with two values each, 20 noiseless 16 pixel images per
    value: 16 train images and one query plus one candidate in each of val
    and test.
    """
    out_dir = tmp_path_factory.mktemp("tiny_dataset")
    spec = SyntheticSpec(value_counts=(2, 2), names=('a', 'b'), per_value=20,
                         side=16, noise=0.0, seed=0)
    return generate_synthetic_dataset(spec, str(out_dir))
