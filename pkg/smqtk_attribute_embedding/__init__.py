from smqtk_attribute_embedding._defaults import DFLT_EMBEDDING_FACTORY  # noqa: F401
from smqtk_attribute_embedding.interfaces.attribute_embedder import AttributeEmbedder  # noqa: F401
from smqtk_attribute_embedding.interfaces.embedding_element import EmbeddingElement  # noqa: F401
