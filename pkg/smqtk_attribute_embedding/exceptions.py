from typing import Optional


class AttributeEmbeddingError (Exception):
    """
    Base of the errors raised by this package.
    """


class ShapeError (AttributeEmbeddingError, ValueError):
    """
    Tensor extents are inconsistent with an operation or a parameter block.
    """


class ContractError (AttributeEmbeddingError, ValueError):
    """
    A caller violated an operation precondition (non-scalar loss, missing
    gradient, empty input where one is required, ...).
    """


class ConfigError (AttributeEmbeddingError, ValueError):
    """
    Configuration values are out of their valid range or inconsistent.
    """


class DataError (AttributeEmbeddingError):
    """
    Dataset content cannot satisfy a request (unreadable image, attribute
    without enough values to sample triplets, missing index entry, ...).
    """


class FormatError (AttributeEmbeddingError):
    """
    Malformed bytes in an image, checkpoint or index file.

    :param message: Description of the problem.
    :param offset: Byte offset into the input at which the problem was found.
    """

    def __init__(self, message: str, offset: Optional[int] = None) -> None:
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CompatibilityError (AttributeEmbeddingError):
    """
    A persisted artifact does not match the version or dimensions expected.
    """


class NonFiniteLossError (AttributeEmbeddingError):
    """
    Training produced a NaN or infinite loss.

    :param message: Description of the problem.
    :param batch_index: Index of the offending mini-batch within its epoch.
    """

    def __init__(self, message: str, batch_index: int) -> None:
        super().__init__(message)
        self.batch_index = batch_index


class NoEmbeddingError (AttributeEmbeddingError):
    """
    When an EmbeddingElement has no stored data (paired global and local
    attribute-specific vectors).
    """
