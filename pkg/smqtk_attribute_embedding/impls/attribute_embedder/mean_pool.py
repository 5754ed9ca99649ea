from typing import Iterable, Optional, Tuple

import numpy as np

from smqtk_attribute_embedding.data.images import pixels_to_tensor
from smqtk_attribute_embedding.exceptions import CompatibilityError
from smqtk_attribute_embedding.interfaces.attribute_embedder import AttributeEmbedder
from smqtk_attribute_embedding.model.checkpoint import load_checkpoint
from smqtk_attribute_embedding.model.network import MeanPoolTripletNetwork


class MeanPoolTripletEmbedder (AttributeEmbedder):
    """
    ``AttributeEmbedder`` over the attribute-agnostic mean-pool baseline. The
    attribute is ignored and the single vector is returned as both halves of
    the pair, so fused similarity reduces to plain cosine similarity.

    :param checkpoint_path: Path of a checkpoint written by baseline
        training.
    """

    def __init__(self, checkpoint_path: Optional[str] = None):
        self.checkpoint_path = checkpoint_path
        self.network: Optional[MeanPoolTripletNetwork] = None

    @classmethod
    def from_network(cls, network: MeanPoolTripletNetwork) -> "MeanPoolTripletEmbedder":
        inst = cls()
        inst.network = network
        return inst

    def get_network(self) -> MeanPoolTripletNetwork:
        network = self.network
        if network is None:
            if self.checkpoint_path is None:
                raise CompatibilityError("No checkpoint path configured")
            network = load_checkpoint(self.checkpoint_path).network
            if not isinstance(network, MeanPoolTripletNetwork):
                raise CompatibilityError(
                    f"Checkpoint '{self.checkpoint_path}' holds a "
                    f"'{network.kind}' network, not a mean-pool one"
                )
            self.network = network
        return network

    @property
    def input_side(self) -> int:
        return self.get_network().config.backbone.input_side

    def embed_images(
        self,
        img_iter: Iterable[np.ndarray],
        attribute_id: int
    ) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
        network = self.get_network()
        side = self.input_side
        pairs = []
        for img in img_iter:
            f = network.embed(pixels_to_tensor(img, side))
            pairs.append((f, f))
        return pairs

    def get_config(self) -> dict:
        return {"checkpoint_path": self.checkpoint_path}

    @classmethod
    def is_usable(cls) -> bool:
        return True
