import logging
from typing import Iterable, Optional, Tuple

import numpy as np

from smqtk_attribute_embedding.data.images import pixels_to_tensor
from smqtk_attribute_embedding.exceptions import CompatibilityError
from smqtk_attribute_embedding.interfaces.attribute_embedder import AttributeEmbedder
from smqtk_attribute_embedding.model.checkpoint import load_checkpoint
from smqtk_attribute_embedding.model.network import AttributeEmbeddingNetwork


LOG = logging.getLogger(__name__)


class TwoBranchAttributeEmbedder (AttributeEmbedder):
    """
    ``AttributeEmbedder`` over a trained two-branch network: attention on the
    full image, then attention again on the region that the spatial map
    points at.

    :param checkpoint_path: Path of a checkpoint written by training.
    :param log_every: Log progress after this many images. Zero disables.
    """

    def __init__(
        self,
        checkpoint_path: Optional[str] = None,
        log_every: int = 0,
    ):
        self.checkpoint_path = checkpoint_path
        self.log_every = log_every

        # Set to None for lazy loading later.
        self.network: Optional[AttributeEmbeddingNetwork] = None

    @classmethod
    def from_network(cls, network: AttributeEmbeddingNetwork) -> "TwoBranchAttributeEmbedder":
        """
        Wrap an in-memory network, e.g. one still being trained.
        """
        inst = cls()
        inst.network = network
        return inst

    def get_network(self) -> AttributeEmbeddingNetwork:
        """
        Lazy load the network in an idempotent manner.

        :raises CompatibilityError: The checkpoint holds another kind of
            network, or no checkpoint path was configured.
        """
        network = self.network
        if network is None:
            if self.checkpoint_path is None:
                raise CompatibilityError("No checkpoint path configured")
            network = load_checkpoint(self.checkpoint_path).network
            if not isinstance(network, AttributeEmbeddingNetwork):
                raise CompatibilityError(
                    f"Checkpoint '{self.checkpoint_path}' holds a "
                    f"'{network.kind}' network, not a two-branch one"
                )
            self.network = network
        return network

    @property
    def input_side(self) -> int:
        return self.get_network().config.global_branch.backbone.input_side

    def embed_images(
        self,
        img_iter: Iterable[np.ndarray],
        attribute_id: int
    ) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
        network = self.get_network()
        side = self.input_side
        pairs = []
        for i, img in enumerate(img_iter, start=1):
            pairs.append(network.embed(pixels_to_tensor(img, side), attribute_id))
            if self.log_every and i % self.log_every == 0:
                LOG.info(f"{i} images embedded for attribute {attribute_id}")
        return pairs

    def get_config(self) -> dict:
        return {
            "checkpoint_path": self.checkpoint_path,
            "log_every": self.log_every,
        }

    @classmethod
    def is_usable(cls) -> bool:
        return True
