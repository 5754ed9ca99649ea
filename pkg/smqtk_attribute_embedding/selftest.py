"""
Numerical self checks: tape gradients against finite differences, attention
invariants, and the localization and ranking code against brute-force
oracles.
"""
import logging
from typing import Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from smqtk_attribute_embedding.autodiff import ops
from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.localization import connected_components, region_bbox, squarify
from smqtk_attribute_embedding.model.attention import BranchParams, branch_forward
from smqtk_attribute_embedding.model.backbone import AttributeEmbeddingTable, extract_features
from smqtk_attribute_embedding.model.config import BackboneConfig, BranchConfig
from smqtk_attribute_embedding.retrieval.metrics import (
    RECALL_HIT,
    QueryRelevance,
    average_precision,
    mean_average_precision,
    recall_at_k,
)
from smqtk_attribute_embedding.training.config import LossWeights
from smqtk_attribute_embedding.training.losses import alignment_loss, joint_loss, triplet_loss
from smqtk_attribute_embedding.utils.bbox import bbox_bounds, bbox_contains, bbox_within, make_bbox
from smqtk_attribute_embedding.utils.gradcheck import max_gradient_error
from smqtk_attribute_embedding.utils.oracles import (
    average_precision_terms,
    brute_force_bbox,
    flood_fill_components,
    hit_at_k,
)

LOG = logging.getLogger(__name__)

OP_TOLERANCE = 1e-5
BRANCH_TOLERANCE = 1e-4


class CheckResult (NamedTuple):
    name: str
    passed: bool
    detail: str


Case = Tuple[Callable[[Sequence[Tensor]], Tensor], List[np.ndarray]]


def op_cases(rng: np.random.Generator) -> Dict[str, Case]:
    """
    One random instance of every differentiable operation.
    """
    def u(*shape: int) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, shape)

    return {
        'add': (lambda t: ops.add(t[0], t[1]), [u(3, 4), u(4)]),
        'sub': (lambda t: ops.sub(t[0], t[1]), [u(3, 4), u(3, 4)]),
        'mul': (lambda t: ops.mul(t[0], t[1]), [u(3, 4), u(3, 1)]),
        'matmul': (lambda t: ops.matmul(t[0], t[1]), [u(3, 4), u(4, 2)]),
        'matvec': (lambda t: ops.matmul(t[0], t[1]), [u(3, 4), u(4)]),
        'conv2d': (lambda t: ops.conv2d(t[0], t[1], t[2], stride=2, padding=1),
                   [u(2, 5, 5), u(3, 2, 3, 3), u(3)]),
        'tanh': (lambda t: ops.tanh(t[0]), [u(6)]),
        'relu': (lambda t: ops.relu(t[0]), [u(6)]),
        'sigmoid': (lambda t: ops.sigmoid(t[0]), [u(6)]),
        'softmax': (lambda t: ops.softmax(t[0], axis=0), [u(4, 3)]),
        'reshape': (lambda t: ops.reshape(t[0], (6, 2)), [u(3, 4)]),
        'concat': (lambda t: ops.concat([t[0], t[1]]), [u(3), u(5)]),
        'sum_all': (lambda t: ops.sum_all(t[0]), [u(3, 4)]),
        'mean': (lambda t: ops.mean(t[0], axis=1), [u(2, 3, 3)]),
        'stack_sum': (lambda t: ops.stack_sum([t[0], t[1]]), [u(1), u(1)]),
        'cosine_similarity': (lambda t: ops.cosine_similarity(t[0], t[1]), [u(5), u(5)]),
    }


def tiny_branch_config() -> BranchConfig:
    return BranchConfig(BackboneConfig(input_side=8, block_specs=((4, 3, 2),), label="selftest"),
                        c_1=3, c_2=3, c_o=3, reduction=2)


def branch_case(rng: np.random.Generator, attribute_dim: int = 3) -> Case:
    """
    The whole branch as a function of the image, every branch parameter and
    the attribute table.
    """
    config = tiny_branch_config()
    params = BranchParams.initialize(config, attribute_dim, rng)
    names = sorted(params)
    table = rng.uniform(-1.0, 1.0, (2, attribute_dim))
    image = rng.uniform(0.0, 1.0, (3, 8, 8))

    def fn(t: Sequence[Tensor]) -> Tensor:
        p = BranchParams(config, attribute_dim, dict(zip(names, t[2:])))
        return branch_forward(t[0], 1, p, AttributeEmbeddingTable(t[1])).f

    return fn, [image, table] + [params[n].data + rng.normal(0, 0.1, params[n].shape)
                                 for n in names]


def check_gradients(instances: int = 20, seed: int = 0) -> List[CheckResult]:
    worst: Dict[str, float] = {}
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        for name, (fn, inputs) in op_cases(rng).items():
            worst[name] = max(worst.get(name, 0.0), max_gradient_error(fn, inputs, seed=i))
    results = [CheckResult(f"gradient {name}", err < OP_TOLERANCE, f"max relative error {err:.2e}")
               for name, err in sorted(worst.items())]
    branch_err = 0.0
    for i in range(instances):
        fn, inputs = branch_case(np.random.default_rng([seed, 1000 + i]))
        branch_err = max(branch_err, max_gradient_error(fn, inputs, seed=i))
    results.append(CheckResult("gradient branch_forward", branch_err < BRANCH_TOLERANCE,
                               f"max relative error {branch_err:.2e}"))
    return results


def check_attention(count: int = 1000, seed: int = 0) -> CheckResult:
    """
    Spatial weights sum to one, channel gates lie in (0, 1), the attended
    feature stays within each channel's envelope and gating never grows it.
    """
    config = tiny_branch_config()
    rng = np.random.default_rng(seed)
    params = BranchParams.initialize(config, 3, rng)
    table = AttributeEmbeddingTable(Tensor(rng.uniform(-1.0, 1.0, (2, 3))))
    for k in range(count):
        image = Tensor(rng.uniform(0.0, 1.0, (3, 8, 8)))
        x = extract_features(image, config.backbone, params).data.reshape(config.c, -1)
        out = branch_forward(image, k % 2, params, table)
        alpha_s = out.alpha_s.data
        assert out.alpha_c is not None
        alpha_c = out.alpha_c.data
        x_s = out.x_s.data
        if abs(alpha_s.sum() - 1.0) > 1e-9:
            return CheckResult("attention invariants", False, f"alpha_s sums to {alpha_s.sum()}")
        if not ((alpha_c > 0).all() and (alpha_c < 1).all()):
            return CheckResult("attention invariants", False, "alpha_c outside (0, 1)")
        if (x_s < x.min(axis=1) - 1e-12).any() or (x_s > x.max(axis=1) + 1e-12).any():
            return CheckResult("attention invariants", False, "x_s outside the channel envelope")
        if (np.abs(out.x_c.data) > np.abs(x_s) + 1e-12).any():
            return CheckResult("attention invariants", False, "|x_c| exceeds |x_s|")
    return CheckResult("attention invariants", True, f"{count} inputs")


def check_localization(count: int = 500, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    for k in range(count):
        h, w = rng.integers(1, 17, size=2)
        binary = rng.random((h, w)) < rng.uniform(0.1, 0.7)
        for conn in (4, 8):
            expected = sorted(flood_fill_components(binary, conn), key=len, reverse=True)
            got = [r.pixels for r in connected_components(binary, conn)]
            if got != expected:
                return CheckResult("localization oracle", False, f"components differ, case {k}")
            for region in got:
                if bbox_bounds(region_bbox(region)) != brute_force_bbox(list(region)):
                    return CheckResult("localization oracle", False, f"bbox differs, case {k}")
        side = int(rng.integers(2, 17))
        r0, r1 = sorted(rng.integers(0, side, size=2))
        c0, c1 = sorted(rng.integers(0, side, size=2))
        box = make_bbox(r0, c0, r1, c1)
        sq = squarify(box, side, int(rng.integers(1, side + 1)))
        b = bbox_bounds(sq)
        if b[2] - b[0] != b[3] - b[1] or not bbox_within(sq, side) or not bbox_contains(sq, box):
            return CheckResult("localization oracle", False, f"squarify {b} from {(r0, c0, r1, c1)}")
    return CheckResult("localization oracle", True, f"{count} maps")


def check_metrics(count: int = 200, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    queries = []
    for k in range(count):
        n = int(rng.integers(1, 9))
        rel = (rng.random(n) < 0.4).tolist()
        total = sum(rel) + int(rng.integers(0 if any(rel) else 1, 3))
        ap = average_precision(rel, total)
        if abs(ap - average_precision_terms(rel, total)) > 1e-12:
            return CheckResult("metric oracle", False, f"AP differs, case {k}")
        queries.append(QueryRelevance(rel, total))
    expected_map = sum(average_precision_terms(q.relevance, q.total_relevant)
                       for q in queries) / len(queries)
    expected_recall = sum(hit_at_k(q.relevance, 3) for q in queries) / len(queries)
    ok = (abs(mean_average_precision(queries) - expected_map) < 1e-12
          and abs(recall_at_k(queries, 3, RECALL_HIT) - expected_recall) < 1e-12)
    return CheckResult("metric oracle", ok, f"{count} ranked lists")


def check_losses() -> CheckResult:
    w = LossWeights()
    e1 = Tensor(np.array([1.0, 0.0]))
    e2 = Tensor(np.array([0.0, 1.0]))
    cases = [
        (triplet_loss(1.0, -1.0, 0.2).item(), 0.0),
        (triplet_loss(0.3, 0.3, 0.2).item(), 0.2),
        (alignment_loss([(e1, e1)] * 3).item(), 0.0),
        (alignment_loss([(e1, ops.mul(e1, -1.0))] * 3).item(), 6.0),
        (alignment_loss([(e1, e2)] * 3).item(), 3.0),
        (joint_loss(1.0, 2.0, 3.0, w).item(), 1.0 * 1.0 + 0.1 * 2.0 + 0.1 * 3.0),
    ]
    bad = [(got, want) for got, want in cases if abs(got - want) > 1e-12]
    return CheckResult("loss anchors", not bad, f"mismatches {bad}" if bad else f"{len(cases)} anchors")


def run_selftest(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    """
    :param quick: Use fewer random instances.
    """
    scale = 4 if quick else 1
    results = check_gradients(max(1, 20 // scale), seed)
    results.append(check_attention(1000 // scale, seed))
    results.append(check_localization(500 // scale, seed))
    results.append(check_metrics(200 // scale, seed))
    results.append(check_losses())
    for r in results:
        (LOG.info if r.passed else LOG.error)(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return results
