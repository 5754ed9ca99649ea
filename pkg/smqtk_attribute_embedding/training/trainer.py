"""
Two-stage triplet training of the attribute embedding network, plus the
single-stage training of the mean-pool baseline.
"""
import logging
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from smqtk_attribute_embedding.autodiff import ops
from smqtk_attribute_embedding.autodiff.adam import AdamState, adam_step
from smqtk_attribute_embedding.autodiff.tensor import Tape, Tensor, backward
from smqtk_attribute_embedding.data.images import load_image
from smqtk_attribute_embedding.data.manifest import TRAIN, VAL, DatasetManifest
from smqtk_attribute_embedding.exceptions import ContractError, NonFiniteLossError
from smqtk_attribute_embedding.impls.attribute_embedder.mean_pool import MeanPoolTripletEmbedder
from smqtk_attribute_embedding.impls.attribute_embedder.two_branch import TwoBranchAttributeEmbedder
from smqtk_attribute_embedding.interfaces.attribute_embedder import AttributeEmbedder
from smqtk_attribute_embedding.model.checkpoint import TrainingCursor, load_checkpoint, save_checkpoint
from smqtk_attribute_embedding.model.network import (
    GLOBAL_GROUP,
    LOCAL_GROUP,
    AttributeEmbeddingNetwork,
    EmbeddingNetwork,
    MeanPoolTripletNetwork,
)
from smqtk_attribute_embedding.retrieval.evaluation import evaluate_index
from smqtk_attribute_embedding.retrieval.index import build_index
from smqtk_attribute_embedding.retrieval.similarity import FusionConfig
from smqtk_attribute_embedding.training.config import LossWeights, TrainConfig, learning_rate
from smqtk_attribute_embedding.training.losses import (
    alignment_loss,
    joint_loss,
    triplet_loss,
    triplet_similarities,
)
from smqtk_attribute_embedding.training.sampling import Triplet, batches, sample_epoch
from smqtk_attribute_embedding.utils.binary_io import save_bytes

LOG = logging.getLogger(__name__)

STAGE1 = 'stage1'
STAGE2 = 'stage2'
BASELINE = 'baseline'

# Seed salt per stage so the stages draw different triplet streams.
_STAGE_SALT = {STAGE1: 1, STAGE2: 2, BASELINE: 3}


class EpochLosses (NamedTuple):
    """
    Per-batch losses averaged over one epoch.
    """
    epoch: int
    l_g: float
    l_l: float
    l_a: float
    joint: float


class BatchLosses (NamedTuple):
    l_g: Tensor
    l_l: Tensor
    l_a: Tensor
    joint: Tensor


def format_trace(trace: Mapping[str, Sequence[EpochLosses]]) -> str:
    """
    Comma separated ``epoch,L_g,L_l,L_a,joint`` rows below one
    ``# <stage>`` line per stage.
    """
    lines = []
    for stage, rows in trace.items():
        lines.append(f"# {stage}")
        lines.append("epoch,L_g,L_l,L_a,joint")
        lines.extend(f"{r.epoch},{r.l_g!r},{r.l_l!r},{r.l_a!r},{r.joint!r}" for r in rows)
    return '\n'.join(lines) + '\n'


def _zero_fill(params: Mapping[str, Tensor]) -> None:
    for p in params.values():
        if p.grad is None:
            p.grad = np.zeros(p.shape)


def _snapshot(network: EmbeddingNetwork) -> Dict[str, np.ndarray]:
    return {k: np.array(v) for k, v in network.named_arrays().items()}


def _restore(network: EmbeddingNetwork, arrays: Mapping[str, np.ndarray]) -> None:
    network.apply_updates({k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()})


class TwoStageTrainer (object):
    """
    Runs the training stages over one dataset.

    :param manifest: Dataset; triplets are drawn from its train split and
        validation MAP from its val split.
    :param config: Schedule and optimizer settings.
    :param weights: Loss weights and triplet margin.
    :param checkpoint_path: Where each epoch's checkpoint is written. With
        ``config.select_on_validation`` this file only receives epochs that
        improve validation MAP and the latest epoch goes to
        ``<checkpoint_path>.last``. The network ends on the best epoch, read back
        from this file when a resumed run never improves on it.
    """

    def __init__(self, manifest: DatasetManifest, config: TrainConfig,
                 weights: Optional[LossWeights] = None,
                 checkpoint_path: Optional[str] = None) -> None:
        self.manifest = manifest
        self.config = config
        self.weights = weights or LossWeights()
        self.checkpoint_path = checkpoint_path
        self.trace: Dict[str, List[EpochLosses]] = {}
        self._images: Dict[Tuple[int, int], Tensor] = {}

    def image(self, image_id: int, side: int) -> Tensor:
        key = (image_id, side)
        img = self._images.get(key)
        if img is None:
            img = self._images[key] = load_image(self.manifest.image_path(image_id), side)
        return img

    def write_trace(self, path: str) -> None:
        save_bytes(path, format_trace(self.trace).encode('utf-8'))

    #
    # Per-batch objectives
    #

    def _stage1_losses(self, network: AttributeEmbeddingNetwork,
                       batch: Sequence[Triplet]) -> BatchLosses:
        side = network.config.global_branch.backbone.input_side
        terms = []
        for t in batch:
            f = [network.global_forward(self.image(i, side), t.attribute_id).f
                 for i in (t.anchor_id, t.positive_id, t.negative_id)]
            terms.append(triplet_loss(*triplet_similarities(*f), self.weights.margin))
        l_g = ops.stack_sum(terms)
        zero = Tensor(0.0)
        return BatchLosses(l_g, zero, zero, l_g)

    def _stage2_losses(self, network: AttributeEmbeddingNetwork,
                       batch: Sequence[Triplet]) -> BatchLosses:
        side = network.config.global_branch.backbone.input_side
        use_local = self.weights.needs_local_branch
        g_terms = []
        l_terms = []
        a_terms = []
        for t in batch:
            f_g = []
            f_l = []
            for i in (t.anchor_id, t.positive_id, t.negative_id):
                img = self.image(i, side)
                out_g = network.global_forward(img, t.attribute_id)
                f_g.append(out_g.f)
                if use_local:
                    roi = network.region_of_interest(img, out_g.alpha_s)
                    f_l.append(network.local_forward(roi, t.attribute_id).f)
            g_terms.append(triplet_loss(*triplet_similarities(*f_g), self.weights.margin))
            if use_local:
                l_terms.append(triplet_loss(*triplet_similarities(*f_l), self.weights.margin))
                a_terms.append(alignment_loss(list(zip(f_g, f_l)),
                                              self.config.align_stop_gradient))
        l_g = ops.stack_sum(g_terms)
        l_l = ops.stack_sum(l_terms) if use_local else Tensor(0.0)
        l_a = ops.stack_sum(a_terms) if use_local else Tensor(0.0)
        return BatchLosses(l_g, l_l, l_a, joint_loss(l_g, l_l, l_a, self.weights))

    def _baseline_losses(self, network: MeanPoolTripletNetwork,
                         batch: Sequence[Triplet]) -> BatchLosses:
        side = network.config.backbone.input_side
        terms = []
        for t in batch:
            f = [network.forward(self.image(i, side))
                 for i in (t.anchor_id, t.positive_id, t.negative_id)]
            terms.append(triplet_loss(*triplet_similarities(*f), self.weights.margin))
        l_g = ops.stack_sum(terms)
        zero = Tensor(0.0)
        return BatchLosses(l_g, zero, zero, l_g)

    #
    # Shared epoch loop
    #

    def _run(self, stage: str, network: EmbeddingNetwork, epochs: int,
             schedules: Mapping[str, Tuple[float, float, int]],
             objective: Callable[[Sequence[Triplet]], BatchLosses],
             embedder: Callable[[], AttributeEmbedder],
             cursor: Optional[TrainingCursor]) -> List[EpochLosses]:
        cfg = self.config
        states: Dict[str, AdamState] = {}
        start = 1
        best: Optional[float] = None
        if cursor is not None and cursor.stage == stage:
            states = {g: s for g, s in cursor.optimizers.items() if g in schedules}
            start = cursor.epoch + 1
            best = cursor.best_score
            LOG.info(f"Resuming {stage} after epoch {cursor.epoch}")
        for group in schedules:
            if group not in states:
                states[group] = AdamState(0.0, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        rows = self.trace.setdefault(stage, [])
        best_arrays: Optional[Dict[str, np.ndarray]] = None

        for epoch in range(start, epochs + 1):
            for group, (lr0, decay, every) in schedules.items():
                states[group].lr = learning_rate(lr0, decay, every, epoch)
            triplets = sample_epoch(self.manifest, cfg.triplets_per_epoch,
                                    [cfg.seed, _STAGE_SALT[stage], epoch], TRAIN)
            sums = np.zeros(4)
            n_batches = 0
            for b, batch in enumerate(batches(triplets, cfg.batch_size)):
                with Tape() as tape:
                    losses = objective(batch)
                values = np.array([x.item() for x in losses])
                if not np.isfinite(values).all():
                    raise NonFiniteLossError(
                        f"{stage} epoch {epoch}: non-finite loss {values.tolist()} "
                        f"in batch {b}", b)
                groups = network.parameter_groups()
                backward(losses.joint, tape)
                for group in schedules:
                    params = groups[group]
                    _zero_fill(params)
                    updated, _ = adam_step(params, states[group])
                    network.apply_updates(updated)
                sums += values
                n_batches += 1
                LOG.debug(f"{stage} epoch {epoch} batch {b}: joint {values[3]:.6f}")
            if n_batches == 0:
                raise ContractError("Epoch produced no batches")
            mean = sums / n_batches
            row = EpochLosses(epoch, *(float(v) for v in mean))
            rows.append(row)
            lrs = ', '.join(f"{g} lr {s.lr:.3g}" for g, s in states.items())
            LOG.info(f"{stage} epoch {epoch}/{epochs}: L_g {row.l_g:.4f} L_l {row.l_l:.4f} "
                     f"L_a {row.l_a:.4f} joint {row.joint:.4f} ({lrs})")

            improved = True
            if cfg.select_on_validation:
                score = self.validation_map(embedder())
                if score is None:
                    LOG.warning("No validation images; keeping the last epoch")
                else:
                    LOG.info(f"{stage} epoch {epoch}: validation MAP {100 * score:.2f}")
                    improved = best is None or score > best
                    if improved:
                        best = score
                        best_arrays = _snapshot(network)
            self._save(network, TrainingCursor(stage, epoch, states, best), improved)

        if best_arrays is not None:
            _restore(network, best_arrays)
        elif cfg.select_on_validation and best is not None:
            # Resumed past the best epoch; its weights live in the checkpoint.
            self._restore_best(network, stage)
        return rows

    def _restore_best(self, network: EmbeddingNetwork, stage: str) -> None:
        if self.checkpoint_path is None:
            LOG.warning(f"No checkpoint path; {stage} keeps its last epoch")
            return
        ckpt = load_checkpoint(self.checkpoint_path)
        if ckpt.cursor.stage != stage:
            LOG.warning(f"{self.checkpoint_path} holds {ckpt.cursor.stage}, not {stage}; "
                        f"keeping the last epoch")
            return
        LOG.info(f"Restoring {stage} epoch {ckpt.cursor.epoch} from {self.checkpoint_path}")
        _restore(network, ckpt.network.named_arrays())

    def _save(self, network: EmbeddingNetwork, cursor: TrainingCursor, improved: bool) -> None:
        if self.checkpoint_path is None:
            return
        if self.config.select_on_validation:
            save_checkpoint(network, self.checkpoint_path + '.last', cursor)
        if improved:
            save_checkpoint(network, self.checkpoint_path, cursor)

    def validation_map(self, embedder: AttributeEmbedder) -> Optional[float]:
        """
        Fused MAP on the val split, or None when it holds no images.
        """
        if not self.manifest.select(VAL):
            return None
        index = build_index(self.manifest, embedder, split=VAL)
        return evaluate_index(index, FusionConfig()).overall_map

    #
    # Stages
    #

    def train_stage1(self, network: AttributeEmbeddingNetwork,
                     cursor: Optional[TrainingCursor] = None) -> List[EpochLosses]:
        """
        Train the global branch and the attribute table with the global
        triplet loss alone.
        """
        cfg = self.config
        return self._run(
            STAGE1, network, cfg.epochs_stage1,
            {GLOBAL_GROUP: (cfg.lr_global_s1, cfg.decay_s1, cfg.decay_every_s1)},
            lambda batch: self._stage1_losses(network, batch),
            lambda: TwoBranchAttributeEmbedder.from_network(network),
            cursor,
        )

    def train_stage2(self, network: AttributeEmbeddingNetwork,
                     cursor: Optional[TrainingCursor] = None) -> List[EpochLosses]:
        """
        Train both branches on the joint objective, with localized regions
        of interest feeding the local branch.
        """
        cfg = self.config
        if not self.weights.needs_local_branch:
            LOG.info("beta = gamma = 0: the local branch is not evaluated")
        return self._run(
            STAGE2, network, cfg.epochs_stage2,
            {GLOBAL_GROUP: (cfg.lr_global_s2, cfg.decay_s2, cfg.decay_every_s2),
             LOCAL_GROUP: (cfg.lr_local_s2, cfg.decay_s2, cfg.decay_every_s2)},
            lambda batch: self._stage2_losses(network, batch),
            lambda: TwoBranchAttributeEmbedder.from_network(network),
            cursor,
        )

    def train_baseline(self, network: MeanPoolTripletNetwork,
                       cursor: Optional[TrainingCursor] = None) -> List[EpochLosses]:
        """
        Train the attribute-agnostic mean-pool network on the stage 1
        schedule.
        """
        cfg = self.config
        return self._run(
            BASELINE, network, cfg.epochs_stage1,
            {GLOBAL_GROUP: (cfg.lr_global_s1, cfg.decay_s1, cfg.decay_every_s1)},
            lambda batch: self._baseline_losses(network, batch),
            lambda: MeanPoolTripletEmbedder.from_network(network),
            cursor,
        )
