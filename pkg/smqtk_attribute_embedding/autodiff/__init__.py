from smqtk_attribute_embedding.autodiff.tensor import (  # noqa: F401
    Tensor, Tape, active_tape, as_tensor, backward
)
from smqtk_attribute_embedding.autodiff.ops import (  # noqa: F401
    activation, add, concat, conv2d, cosine_similarity, detach, matmul, mean,
    mul, relu, reshape, sigmoid, softmax, stack_sum, sub, sum_all, tanh
)
from smqtk_attribute_embedding.autodiff.adam import AdamState, adam_step  # noqa: F401
