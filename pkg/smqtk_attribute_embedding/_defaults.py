"""
Default values and instances for the embedding interfaces.
"""
from smqtk_attribute_embedding.embedding_element_factory import EmbeddingElementFactory
from smqtk_attribute_embedding.impls.embedding_element.memory \
    import MemoryEmbeddingElement

DFLT_EMBEDDING_FACTORY = EmbeddingElementFactory(
    MemoryEmbeddingElement, {}
)
