"""
Checkpoint persistence: network parameters, dimension header and training
cursor (stage, epoch, optimizer state) in the ``binary_io`` container.
"""
import logging
from typing import Any, Dict, Mapping, NamedTuple, Optional, Union

import numpy as np

from smqtk_attribute_embedding.autodiff.adam import AdamState
from smqtk_attribute_embedding.exceptions import (
    CompatibilityError, ConfigError, FormatError
)
from smqtk_attribute_embedding.model.config import BranchConfig, ModelConfig
from smqtk_attribute_embedding.model.network import (
    AttributeEmbeddingNetwork, EmbeddingNetwork, MeanPoolTripletNetwork
)
from smqtk_attribute_embedding.utils.binary_io import (
    decode_container, encode_container, load_bytes, save_bytes
)

LOG = logging.getLogger(__name__)

MAGIC = b'ATTRCKPT'
VERSION = 1

AnyNetwork = Union[AttributeEmbeddingNetwork, MeanPoolTripletNetwork]


class TrainingCursor (NamedTuple):
    stage: str = 'init'
    epoch: int = 0
    optimizers: Mapping[str, AdamState] = {}
    best_score: Optional[float] = None


class Checkpoint (NamedTuple):
    network: AnyNetwork
    cursor: TrainingCursor


def _branch_dims(config: BranchConfig) -> Dict[str, int]:
    return {"c": config.c, "c_1": config.c_1, "c_2": config.c_2,
            "c_o": config.c_o, "r": config.reduction}


def dimension_header(network: EmbeddingNetwork) -> Dict[str, Any]:
    if isinstance(network, AttributeEmbeddingNetwork):
        conf = network.config
        return {"n": conf.num_attributes, "c_a": conf.attribute_dim,
                "global": _branch_dims(conf.global_branch),
                "local": _branch_dims(conf.local_branch)}
    assert isinstance(network, MeanPoolTripletNetwork)
    return {"global": _branch_dims(network.config)}


def encode_checkpoint(network: EmbeddingNetwork,
                      cursor: Optional[TrainingCursor] = None) -> bytes:
    cursor = cursor or TrainingCursor()
    optimizers = {}
    arrays: Dict[str, np.ndarray] = {}
    params = network.named_arrays()
    for name in sorted(params):
        arrays[name] = params[name]
    for group in sorted(cursor.optimizers):
        state = cursor.optimizers[group]
        optimizers[group] = {"step": state.step, "lr": state.lr, "beta1": state.beta1,
                             "beta2": state.beta2, "eps": state.eps}
        moments = state.moments()
        for name in sorted(moments):
            arrays[f"adam/{group}/{name}"] = moments[name]
    header = {
        "kind": network.kind,
        "model": network.config_dict(),
        "dims": dimension_header(network),
        "cursor": {"stage": cursor.stage, "epoch": cursor.epoch,
                   "best_score": cursor.best_score, "optimizers": optimizers},
    }
    return encode_container(MAGIC, VERSION, header, arrays)


def decode_checkpoint(data: bytes,
                      expected: Optional[Dict[str, Any]] = None) -> Checkpoint:
    """
    :param data: Encoded checkpoint.
    :param expected: Optional model configuration the checkpoint must carry.

    :raises FormatError: Malformed or truncated bytes.
    :raises CompatibilityError: Unsupported version, or a dimension header
        that disagrees with the configuration, the stored arrays or
        ``expected``.
    """
    header, arrays = decode_container(data, MAGIC, VERSION)
    try:
        kind = header['kind']
        model_conf = header['model']
        dims = header['dims']
        cursor_h = header['cursor']
    except (KeyError, TypeError) as ex:
        raise FormatError(f"Checkpoint header lacks {ex}") from ex
    if expected is not None and expected != model_conf:
        raise CompatibilityError("Checkpoint model configuration differs from the expected one")

    params = {k: v for k, v in arrays.items() if not k.startswith('adam/')}
    network: AnyNetwork
    try:
        if kind == AttributeEmbeddingNetwork.kind:
            network = AttributeEmbeddingNetwork.from_arrays(
                ModelConfig.from_config(model_conf, merge_default=False), params)
        elif kind == MeanPoolTripletNetwork.kind:
            network = MeanPoolTripletNetwork.from_arrays(
                BranchConfig.from_config(model_conf, merge_default=False), params)
        else:
            raise CompatibilityError(f"Unknown checkpoint kind {kind!r}")
    except (ConfigError, TypeError) as ex:
        raise CompatibilityError(f"Invalid model header: {ex}") from ex
    if dimension_header(network) != dims:
        raise CompatibilityError(
            f"Dimension header {dims} does not match the model configuration "
            f"{dimension_header(network)}"
        )

    optimizers = {}
    groups = network.parameter_groups()
    for group, h in cursor_h.get('optimizers', {}).items():
        state = AdamState(h['lr'], h['beta1'], h['beta2'], h['eps'])
        prefix = f"adam/{group}/"
        moments = {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
        for key, value in moments.items():
            target = groups.get(group, {}).get(key[2:])
            if target is None or target.shape != value.shape:
                raise CompatibilityError(f"Optimizer moment '{prefix}{key}' matches no parameter")
        state.load_moments(int(h['step']), moments)
        optimizers[group] = state
    cursor = TrainingCursor(cursor_h['stage'], int(cursor_h['epoch']), optimizers,
                            cursor_h.get('best_score'))
    return Checkpoint(network, cursor)


def save_checkpoint(network: EmbeddingNetwork, path: str,
                    cursor: Optional[TrainingCursor] = None) -> None:
    save_bytes(path, encode_checkpoint(network, cursor))
    LOG.info(f"Wrote checkpoint {path}")


def load_checkpoint(path: str, expected: Optional[Dict[str, Any]] = None) -> Checkpoint:
    """
    :raises DataError: Missing file.

    See :func:`decode_checkpoint` for the other errors.
    """
    return decode_checkpoint(load_bytes(path), expected)
