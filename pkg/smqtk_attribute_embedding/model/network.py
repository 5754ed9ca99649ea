"""
Complete embedding networks: the two-branch attribute-specific network and
the attribute-agnostic mean-pool triplet baseline.
"""
import abc
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import CompatibilityError, ShapeError
from smqtk_attribute_embedding.localization import localize
from smqtk_attribute_embedding.model.attention import (
    AttentionOutputs, BranchParams, branch_forward
)
from smqtk_attribute_embedding.model.backbone import TABLE_NAME, AttributeEmbeddingTable
from smqtk_attribute_embedding.model.config import BranchConfig, ModelConfig

GLOBAL_PREFIX = 'global/'
LOCAL_PREFIX = 'local/'

#: Names of the optimizer groups. The attribute table trains with the
#: global group.
GLOBAL_GROUP = 'global'
LOCAL_GROUP = 'local'


def _prefixed(prefix: str, params: Mapping[str, Tensor]) -> Dict[str, Tensor]:
    return {prefix + k: params[k] for k in params}


def _strip(prefix: str, named: Mapping[str, Any]) -> Dict[str, Any]:
    return {k[len(prefix):]: v for k, v in named.items() if k.startswith(prefix)}


def _as_params(arrays: Mapping[str, np.ndarray]) -> Dict[str, Tensor]:
    return {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()}


class EmbeddingNetwork (abc.ABC):
    """
    Parameters plus forward computation of a persisted embedding network.
    """

    #: Checkpoint ``kind`` tag.
    kind: str = ''

    @abc.abstractmethod
    def config_dict(self) -> Dict[str, Any]:
        """
        :return: JSON-compliant configuration stored in checkpoint headers.
        """

    @abc.abstractmethod
    def named_arrays(self) -> Dict[str, np.ndarray]:
        """
        :return: Every parameter value by its persisted name.
        """

    @abc.abstractmethod
    def parameter_groups(self) -> Dict[str, Dict[str, Tensor]]:
        """
        :return: Optimizer group name to the group's named parameters.
        """

    @abc.abstractmethod
    def apply_updates(self, updated: Mapping[str, Tensor]) -> None:
        """
        Swap in new tensors for some of the named parameters.
        """


class AttributeEmbeddingNetwork (EmbeddingNetwork):
    """
    Global and local attention branches sharing one attribute table.

    :param config: Network dimensions.
    :param table: Shared attribute embedding table.
    :param global_params: Global branch parameters.
    :param local_params: Local branch parameters.
    """

    kind = 'two_branch'

    def __init__(self, config: ModelConfig, table: AttributeEmbeddingTable,
                 global_params: BranchParams, local_params: BranchParams) -> None:
        if table.weights.shape != (config.num_attributes, config.attribute_dim):
            raise ShapeError(
                f"Attribute table shape {table.weights.shape} does not match "
                f"({config.num_attributes}, {config.attribute_dim})"
            )
        self.config = config
        self.table = table
        self.global_params = global_params
        self.local_params = local_params

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> "AttributeEmbeddingNetwork":
        rng = np.random.default_rng(seed)
        table = AttributeEmbeddingTable.initialize(
            config.num_attributes, config.attribute_dim, rng)
        g = BranchParams.initialize(config.global_branch, config.attribute_dim, rng)
        loc = BranchParams.initialize(config.local_branch, config.attribute_dim, rng)
        return cls(config, table, g, loc)

    @classmethod
    def from_arrays(cls, config: ModelConfig,
                    arrays: Mapping[str, np.ndarray]) -> "AttributeEmbeddingNetwork":
        """
        :raises CompatibilityError: Array names or shapes do not match
            ``config``.
        """
        try:
            table = AttributeEmbeddingTable(
                Tensor(arrays[TABLE_NAME], requires_grad=True, name=TABLE_NAME))
            g = BranchParams(config.global_branch, config.attribute_dim,
                             _as_params(_strip(GLOBAL_PREFIX, arrays)))
            loc = BranchParams(config.local_branch, config.attribute_dim,
                               _as_params(_strip(LOCAL_PREFIX, arrays)))
            return cls(config, table, g, loc)
        except (KeyError, ShapeError) as ex:
            raise CompatibilityError(f"Parameters do not match the model header: {ex}") from ex

    def config_dict(self) -> Dict[str, Any]:
        return self.config.get_config()

    def named_arrays(self) -> Dict[str, np.ndarray]:
        out = {TABLE_NAME: self.table.weights.data}
        out.update({GLOBAL_PREFIX + k: v for k, v in self.global_params.arrays().items()})
        out.update({LOCAL_PREFIX + k: v for k, v in self.local_params.arrays().items()})
        return out

    def parameter_groups(self) -> Dict[str, Dict[str, Tensor]]:
        g = {TABLE_NAME: self.table.weights}
        g.update(_prefixed(GLOBAL_PREFIX, self.global_params))
        return {GLOBAL_GROUP: g,
                LOCAL_GROUP: _prefixed(LOCAL_PREFIX, self.local_params)}

    def apply_updates(self, updated: Mapping[str, Tensor]) -> None:
        if TABLE_NAME in updated:
            self.table.weights = updated[TABLE_NAME]
        g = _strip(GLOBAL_PREFIX, updated)
        if g:
            self.global_params.replace({**dict(self.global_params.items()), **g})
        loc = _strip(LOCAL_PREFIX, updated)
        if loc:
            self.local_params.replace({**dict(self.local_params.items()), **loc})

    def global_forward(self, image: Tensor, attribute_id: int) -> AttentionOutputs:
        return branch_forward(image, attribute_id, self.global_params, self.table)

    def local_forward(self, roi: Tensor, attribute_id: int) -> AttentionOutputs:
        return branch_forward(roi, attribute_id, self.local_params, self.table)

    def region_of_interest(self, image: Tensor, alpha_s: Tensor) -> Tensor:
        return localize(image, alpha_s, self.config.localization)

    def embed(self, image: Tensor, attribute_id: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Global and local attribute-specific vectors of one image.
        """
        out_g = self.global_forward(image, attribute_id)
        roi = self.region_of_interest(image, out_g.alpha_s)
        out_l = self.local_forward(roi, attribute_id)
        return out_g.f.numpy(), out_l.f.numpy()


class MeanPoolTripletNetwork (EmbeddingNetwork):
    """
    Attribute-agnostic baseline: backbone, spatial mean pooling, projection.

    :param config: Branch configuration; its attention switches are forced
        off.
    :param params: Parameters of that branch.
    """

    kind = 'mean_pool'

    def __init__(self, config: BranchConfig, params: BranchParams) -> None:
        self.config = self.baseline_config(config)
        if params.config.spatial_attention or params.config.channel_attention:
            raise ShapeError("Mean-pool parameters must not carry attention modules")
        self.params = params

    @staticmethod
    def baseline_config(config: BranchConfig) -> BranchConfig:
        conf = config.get_config()
        conf.update(spatial_attention=False, channel_attention=False)
        return BranchConfig.from_config(conf)

    @classmethod
    def initialize(cls, config: BranchConfig, seed: int) -> "MeanPoolTripletNetwork":
        config = cls.baseline_config(config)
        rng = np.random.default_rng(seed)
        return cls(config, BranchParams.initialize(config, 0, rng))

    @classmethod
    def from_arrays(cls, config: BranchConfig,
                    arrays: Mapping[str, np.ndarray]) -> "MeanPoolTripletNetwork":
        config = cls.baseline_config(config)
        try:
            params = BranchParams(config, 0, _as_params(_strip(GLOBAL_PREFIX, arrays)))
        except ShapeError as ex:
            raise CompatibilityError(f"Parameters do not match the model header: {ex}") from ex
        return cls(config, params)

    def config_dict(self) -> Dict[str, Any]:
        return self.config.get_config()

    def named_arrays(self) -> Dict[str, np.ndarray]:
        return {GLOBAL_PREFIX + k: v for k, v in self.params.arrays().items()}

    def parameter_groups(self) -> Dict[str, Dict[str, Tensor]]:
        return {GLOBAL_GROUP: _prefixed(GLOBAL_PREFIX, self.params)}

    def apply_updates(self, updated: Mapping[str, Tensor]) -> None:
        self.params.replace({**dict(self.params.items()), **_strip(GLOBAL_PREFIX, updated)})

    def forward(self, image: Tensor) -> Tensor:
        return branch_forward(image, 0, self.params, None).f

    def embed(self, image: Tensor) -> np.ndarray:
        return self.forward(image).numpy()
