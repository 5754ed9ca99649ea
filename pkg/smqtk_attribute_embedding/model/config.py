"""
Network dimension configuration.

The global backbone stands in for an ImageNet ResNet-50 at 224 pixels and the
local one for a ResNet-34 at 112 pixels; at desk scale both are plain
convolution stacks (conv + bias + relu) on 64 and 32 pixel inputs. The
``label`` of a backbone records which configuration it stands in for.
"""
from typing import Any, Dict, Optional, Sequence, Tuple, Type, TypeVar, Union

from smqtk_core import Configurable
from smqtk_core.dict import merge_dict

from smqtk_attribute_embedding.exceptions import ConfigError
from smqtk_attribute_embedding.localization import LocalizationConfig

BlockSpec = Tuple[int, int, int]

C = TypeVar("C", bound="BranchConfig")
M = TypeVar("M", bound="ModelConfig")

GLOBAL_BLOCKS: Tuple[BlockSpec, ...] = ((16, 3, 2), (32, 3, 2), (64, 3, 2))
LOCAL_BLOCKS: Tuple[BlockSpec, ...] = ((16, 3, 2), (32, 3, 2), (64, 3, 1))


class BackboneConfig (Configurable):
    """
    Convolution stack turning a ``[3, s, s]`` image into a ``[c, s/d, s/d]``
    feature map.

    :param input_side: Side of the square input, in pixels.
    :param block_specs: ``(out_channels, kernel, stride)`` per block. Kernels
        must be odd; every block pads by ``kernel // 2`` so each stride-2
        block halves the map.
    :param label: Free-form preset label.
    """

    def __init__(self, input_side: int = 64,
                 block_specs: Sequence[Sequence[int]] = GLOBAL_BLOCKS,
                 label: str = "global-desk (ResNet-50 @224 substitute)") -> None:
        self.input_side = int(input_side)
        self.block_specs: Tuple[BlockSpec, ...] = tuple(
            (int(b[0]), int(b[1]), int(b[2])) for b in block_specs
        )
        self.label = label
        if not self.block_specs:
            raise ConfigError("A backbone needs at least one block")
        for out_c, k, stride in self.block_specs:
            if out_c < 1 or k < 1 or stride < 1 or k % 2 == 0:
                raise ConfigError(
                    f"Invalid block ({out_c}, {k}, {stride}): channels, kernel "
                    f"and stride must be positive and the kernel odd"
                )
        if self.input_side < 1 or self.input_side % self.downsample_factor:
            raise ConfigError(
                f"input_side {self.input_side} is not divisible by the "
                f"downsample factor {self.downsample_factor}"
            )

    @property
    def feature_channels(self) -> int:
        return self.block_specs[-1][0]

    @property
    def downsample_factor(self) -> int:
        f = 1
        for _, _, stride in self.block_specs:
            f *= stride
        return f

    @property
    def feature_side(self) -> int:
        return self.input_side // self.downsample_factor

    def get_config(self) -> Dict[str, Any]:
        return {
            "input_side": self.input_side,
            "block_specs": [list(b) for b in self.block_specs],
            "label": self.label,
        }

    @classmethod
    def local_desk(cls) -> "BackboneConfig":
        return cls(32, LOCAL_BLOCKS, "local-desk (ResNet-34 @112 substitute)")


class BranchConfig (Configurable):
    """
    Dimensions of one attention branch.

    :param backbone: Backbone configuration (instance or config dict).
    :param c_1: Width of the spatial attention joint space.
    :param c_2: Width of the channel attention attribute mapping.
    :param c_o: Output embedding width.
    :param reduction: Reduction rate ``r`` of the channel attention
        bottleneck; must divide the feature channel count.
    :param spatial_attention: Use attribute-aware spatial attention. When
        False the feature map is mean pooled instead.
    :param channel_attention: Use attribute-aware channel attention. When
        False the pooled feature passes through ungated.
    """

    def __init__(self, backbone: Optional[Union[BackboneConfig, Dict[str, Any]]] = None,
                 c_1: int = 64, c_2: int = 64, c_o: int = 64, reduction: int = 4,
                 spatial_attention: bool = True,
                 channel_attention: bool = True) -> None:
        if backbone is None:
            backbone = BackboneConfig()
        elif isinstance(backbone, dict):
            backbone = BackboneConfig.from_config(backbone)
        self.backbone = backbone
        self.c_1 = int(c_1)
        self.c_2 = int(c_2)
        self.c_o = int(c_o)
        self.reduction = int(reduction)
        self.spatial_attention = bool(spatial_attention)
        self.channel_attention = bool(channel_attention)
        if min(self.c_1, self.c_2, self.c_o, self.reduction) < 1:
            raise ConfigError("Branch dimensions must be positive")
        if self.c % self.reduction:
            raise ConfigError(
                f"Feature channels {self.c} not divisible by reduction {self.reduction}"
            )

    @property
    def c(self) -> int:
        return self.backbone.feature_channels

    @classmethod
    def get_default_config(cls) -> Dict[str, Any]:
        default = super(BranchConfig, cls).get_default_config()
        default['backbone'] = BackboneConfig.get_default_config()
        return default

    @classmethod
    def from_config(cls: Type[C], config_dict: Dict[str, Any],
                    merge_default: bool = True) -> C:
        if merge_default:
            config_dict = merge_dict(cls.get_default_config(), config_dict)
        config_dict = dict(config_dict)
        config_dict['backbone'] = BackboneConfig.from_config(
            config_dict.get('backbone', {}))
        return super(BranchConfig, cls).from_config(config_dict, merge_default=False)

    def get_config(self) -> Dict[str, Any]:
        return {
            "backbone": self.backbone.get_config(),
            "c_1": self.c_1,
            "c_2": self.c_2,
            "c_o": self.c_o,
            "reduction": self.reduction,
            "spatial_attention": self.spatial_attention,
            "channel_attention": self.channel_attention,
        }


class ModelConfig (Configurable):
    """
    Full two-branch network configuration.

    :param num_attributes: Number of attributes ``n`` (rows of the shared
        attribute table).
    :param attribute_dim: Attribute embedding width ``c_a``.
    :param global_branch: Global branch configuration.
    :param local_branch: Local branch configuration; its ``c_o`` must equal
        the global one so the two embeddings can be aligned and fused.
    :param localization: Weakly-supervised RoI extraction settings.
    """

    def __init__(self, num_attributes: int = 2, attribute_dim: int = 32,
                 global_branch: Optional[Union[BranchConfig, Dict[str, Any]]] = None,
                 local_branch: Optional[Union[BranchConfig, Dict[str, Any]]] = None,
                 localization: Optional[Union[LocalizationConfig, Dict[str, Any]]] = None) -> None:
        if global_branch is None:
            global_branch = BranchConfig()
        elif isinstance(global_branch, dict):
            global_branch = BranchConfig.from_config(global_branch)
        if local_branch is None:
            local_branch = BranchConfig(BackboneConfig.local_desk())
        elif isinstance(local_branch, dict):
            local_branch = BranchConfig.from_config(local_branch)
        if localization is None:
            localization = LocalizationConfig(
                local_input_side=local_branch.backbone.input_side)
        elif isinstance(localization, dict):
            localization = LocalizationConfig.from_config(localization)
        self.num_attributes = int(num_attributes)
        self.attribute_dim = int(attribute_dim)
        self.global_branch = global_branch
        self.local_branch = local_branch
        self.localization = localization
        if self.num_attributes < 1 or self.attribute_dim < 1:
            raise ConfigError("num_attributes and attribute_dim must be positive")
        if global_branch.c_o != local_branch.c_o:
            raise ConfigError(
                f"Global c_o {global_branch.c_o} != local c_o {local_branch.c_o}"
            )
        if localization.local_input_side != local_branch.backbone.input_side:
            raise ConfigError(
                f"Localization emits {localization.local_input_side} pixel RoIs but "
                f"the local backbone expects {local_branch.backbone.input_side}"
            )

    @classmethod
    def get_default_config(cls) -> Dict[str, Any]:
        return cls().get_config()

    @classmethod
    def from_config(cls: Type[M], config_dict: Dict[str, Any],
                    merge_default: bool = True) -> M:
        if merge_default:
            config_dict = merge_dict(cls.get_default_config(), config_dict)
        config_dict = dict(config_dict)
        for key, conf_cls in (('global_branch', BranchConfig),
                              ('local_branch', BranchConfig),
                              ('localization', LocalizationConfig)):
            if isinstance(config_dict.get(key), dict):
                config_dict[key] = conf_cls.from_config(config_dict[key])
        return super(ModelConfig, cls).from_config(config_dict, merge_default=False)

    def get_config(self) -> Dict[str, Any]:
        return {
            "num_attributes": self.num_attributes,
            "attribute_dim": self.attribute_dim,
            "global_branch": self.global_branch.get_config(),
            "local_branch": self.local_branch.get_config(),
            "localization": self.localization.get_config(),
        }

    @classmethod
    def desk(cls, num_attributes: int) -> "ModelConfig":
        """
        Desk-scale defaults: c = 64, c_a = 32, c_1 = c_2 = c_o = 64, r = 4,
        64 pixel global and 32 pixel local inputs.
        """
        return cls(num_attributes=num_attributes)
