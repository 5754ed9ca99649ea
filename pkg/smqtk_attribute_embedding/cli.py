"""
Command line entry point: dataset generation, training, indexing, retrieval,
evaluation, reranking, attention inspection and self checks.
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from smqtk_core.dict import merge_dict

from smqtk_attribute_embedding.data.images import load_image, save_gray_map, save_image
from smqtk_attribute_embedding.data.manifest import TEST, VAL, load_dataset
from smqtk_attribute_embedding.data.synthetic import (
    SyntheticSpec,
    generate_synthetic_dataset,
    parse_attribute_spec,
)
from smqtk_attribute_embedding.exceptions import (
    AttributeEmbeddingError,
    CompatibilityError,
    ConfigError,
    ContractError,
    DataError,
)
from smqtk_attribute_embedding.impls.attribute_embedder.mean_pool import MeanPoolTripletEmbedder
from smqtk_attribute_embedding.impls.attribute_embedder.two_branch import TwoBranchAttributeEmbedder
from smqtk_attribute_embedding.interfaces.attribute_embedder import AttributeEmbedder
from smqtk_attribute_embedding.localization import binarize, crop_resize, localize_box
from smqtk_attribute_embedding.model.checkpoint import Checkpoint, load_checkpoint
from smqtk_attribute_embedding.model.config import ModelConfig
from smqtk_attribute_embedding.model.network import (
    AttributeEmbeddingNetwork,
    MeanPoolTripletNetwork,
)
from smqtk_attribute_embedding.retrieval.evaluation import evaluate_index, random_baseline_map
from smqtk_attribute_embedding.retrieval.index import EmbeddingIndex, build_index
from smqtk_attribute_embedding.retrieval.metrics import RECALL_FRACTION, RECALL_HIT
from smqtk_attribute_embedding.retrieval.similarity import (
    FusionConfig,
    RankedList,
    format_rank_file,
    read_rank_file,
    rerank,
    retrieve,
    write_rank_file,
)
from smqtk_attribute_embedding.selftest import run_selftest
from smqtk_attribute_embedding.training.config import LossWeights, TrainConfig
from smqtk_attribute_embedding.training.trainer import STAGE1, STAGE2, TwoStageTrainer
from smqtk_attribute_embedding.utils.bbox import bbox_bounds
from smqtk_attribute_embedding.utils.binary_io import load_bytes
from smqtk_attribute_embedding.utils.resample import bilinear_resize

LOG = logging.getLogger(__name__)


def _id_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(',') if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated ids, got {text!r}")


#
# Configuration
#

def default_run_config(num_attributes: int = 2) -> Dict[str, Any]:
    return {
        "model": ModelConfig.desk(num_attributes).get_config(),
        "train": TrainConfig.get_default_config(),
        "loss_weights": LossWeights.get_default_config(),
    }


def load_run_config(path: Optional[str], num_attributes: int) -> Dict[str, Any]:
    """
    Merge an optional JSON run configuration over the defaults.

    :raises ConfigError: Unreadable JSON or unknown top-level keys.
    """
    config = default_run_config(num_attributes)
    if path is None:
        return config
    try:
        given = json.loads(load_bytes(path).decode('utf-8'))
    except ValueError as ex:
        raise ConfigError(f"Invalid JSON in {path}: {ex}") from ex
    unknown = set(given) - set(config)
    if unknown:
        raise ConfigError(f"Unknown configuration sections {sorted(unknown)} in {path}")
    return merge_dict(config, given)


#
# Sub-commands
#

def cmd_gen_data(args: argparse.Namespace) -> int:
    names, counts = parse_attribute_spec(args.attributes)
    spec = SyntheticSpec(value_counts=counts, names=names, per_value=args.per_value,
                         side=args.side, noise=args.noise, seed=args.seed)
    manifest = generate_synthetic_dataset(spec, args.out)
    print(f"{len(manifest.records)} images written to {args.out}")
    return 0


def _resume(path: Optional[str]) -> Optional[Checkpoint]:
    if path is None:
        return None
    return load_checkpoint(path)


def cmd_train(args: argparse.Namespace) -> int:
    manifest = load_dataset(args.data) if args.data else None
    n = manifest.num_attributes if manifest is not None else 2
    run = load_run_config(args.config, n)
    if args.seed is not None:
        run['train']['seed'] = args.seed
    if args.print_config:
        print(json.dumps(run, indent=2, sort_keys=True))
        return 0
    if manifest is None or args.out is None:
        raise ContractError("train needs --data and --out")
    model_config = ModelConfig.from_config(run['model'])
    train_config = TrainConfig.from_config(run['train'])
    weights = LossWeights.from_config(run['loss_weights'])
    if model_config.num_attributes != manifest.num_attributes:
        raise ConfigError(f"Model has {model_config.num_attributes} attribute rows, dataset "
                          f"declares {manifest.num_attributes}")
    trainer = TwoStageTrainer(manifest, train_config, weights, args.out)
    resumed = _resume(args.resume)

    if args.stage == 'baseline':
        if resumed is not None:
            if not isinstance(resumed.network, MeanPoolTripletNetwork):
                raise CompatibilityError("--resume for baseline needs a mean-pool checkpoint")
            baseline = resumed.network
        else:
            baseline = MeanPoolTripletNetwork.initialize(model_config.global_branch,
                                                         train_config.seed)
        trainer.train_baseline(baseline, resumed.cursor if resumed else None)
    else:
        if resumed is not None:
            if not isinstance(resumed.network, AttributeEmbeddingNetwork):
                raise CompatibilityError("--resume needs a two-branch checkpoint")
            network = resumed.network
        elif args.stage == '2':
            raise ContractError("Stage 2 starts from a stage 1 checkpoint given with --resume")
        else:
            network = AttributeEmbeddingNetwork.initialize(model_config, train_config.seed)
        cursor = resumed.cursor if resumed else None
        if args.stage in ('1', 'both') and not (cursor and cursor.stage == STAGE2):
            trainer.train_stage1(network, cursor if cursor and cursor.stage == STAGE1 else None)
        if args.stage in ('2', 'both'):
            trainer.train_stage2(network, cursor if cursor and cursor.stage == STAGE2 else None)
    trace_path = args.trace or args.out + '.trace.csv'
    trainer.write_trace(trace_path)
    print(f"checkpoint {args.out}, loss trace {trace_path}")
    return 0


def embedder_for(checkpoint_path: str) -> AttributeEmbedder:
    """
    Embedder matching the network kind stored in a checkpoint.
    """
    network = load_checkpoint(checkpoint_path).network
    if isinstance(network, AttributeEmbeddingNetwork):
        return TwoBranchAttributeEmbedder.from_network(network)
    return MeanPoolTripletEmbedder.from_network(network)


def cmd_embed(args: argparse.Namespace) -> int:
    manifest = load_dataset(args.data)
    index = build_index(manifest, embedder_for(args.ckpt), args.attributes, args.split)
    index.save(args.out)
    print(f"{len(index)} entries written to {args.out}")
    return 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    index = EmbeddingIndex.load(args.index)
    ranked = retrieve(args.query, args.attribute, index, args.k, FusionConfig(args.fusion))
    if args.out:
        write_rank_file(ranked, args.out)
    sys.stdout.write(format_rank_file(ranked))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    index = EmbeddingIndex.load(args.index)
    if args.split and index.split and args.split != index.split:
        raise DataError(f"Index was built on split {index.split!r}, not {args.split!r}")
    config = FusionConfig(args.fusion)
    report = evaluate_index(index, config, args.k, args.recall)
    if args.random_baseline is not None:
        report = report._replace(
            baseline_map=random_baseline_map(index, args.random_baseline, config, args.k))
    sys.stdout.write(report.to_text())
    return 0


def cmd_rerank(args: argparse.Namespace) -> int:
    index = EmbeddingIndex.load(args.index)
    initial: RankedList = read_rank_file(args.baseline)
    ranked = rerank(initial, args.attributes, index, FusionConfig(args.fusion), args.top_n)
    if args.out:
        write_rank_file(ranked, args.out)
    sys.stdout.write(format_rank_file(ranked))
    return 0


def cmd_attention(args: argparse.Namespace) -> int:
    manifest = load_dataset(args.data)
    network = load_checkpoint(args.ckpt).network
    if not isinstance(network, AttributeEmbeddingNetwork):
        raise CompatibilityError("attention needs a two-branch checkpoint")
    side = network.config.global_branch.backbone.input_side
    image = load_image(manifest.image_path(args.image), side)
    out = network.global_forward(image, args.attribute)
    loc = network.config.localization
    upsampled = bilinear_resize(out.alpha_s, side, side)
    box = localize_box(out.alpha_s, side, loc)
    roi = crop_resize(image, box, loc.local_input_side)
    os.makedirs(args.out, exist_ok=True)
    save_image(image, os.path.join(args.out, 'image.ppm'))
    save_gray_map(upsampled, os.path.join(args.out, 'alpha_s.pgm'))
    save_gray_map(binarize(upsampled, loc.tau).astype(float), os.path.join(args.out, 'binary.pgm'))
    save_image(roi, os.path.join(args.out, 'roi.ppm'))
    print(f"RoI (row0, col0, row1, col1) = {bbox_bounds(box)}")
    return 0


def cmd_selftest(args: argparse.Namespace) -> int:
    results = run_selftest(quick=args.quick, seed=args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


#
# Parser
#

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='smqtk-attr-embed',
        description="Attribute-specific embedding learning and fine-grained retrieval.")
    parser.add_argument('-v', '--verbose', action='store_true', help="Debug logging.")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen-data', help="Render a synthetic attribute dataset.")
    p.add_argument('--out', required=True)
    p.add_argument('--attributes', default='3,3',
                   help="Comma separated [name:]value-count entries, e.g. collar:3,sleeve:4")
    p.add_argument('--per-value', type=int, default=100)
    p.add_argument('--side', type=int, default=64)
    p.add_argument('--noise', type=float, default=0.05)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser('train', help="Train a network.")
    p.add_argument('--data')
    p.add_argument('--config', help="JSON with model, train and loss_weights sections.")
    p.add_argument('--print-config', action='store_true',
                   help="Print the merged configuration and exit.")
    p.add_argument('--stage', choices=('1', '2', 'both', 'baseline'), default='both')
    p.add_argument('--out', help="Checkpoint path.")
    p.add_argument('--resume', help="Checkpoint to continue from.")
    p.add_argument('--seed', type=int)
    p.add_argument('--trace', help="Loss trace path, <out>.trace.csv by default.")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('embed', help="Index a split with a trained checkpoint.")
    p.add_argument('--data', required=True)
    p.add_argument('--ckpt', required=True)
    p.add_argument('--split', choices=(VAL, TEST), default=TEST)
    p.add_argument('--attributes', type=_id_list)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser('retrieve', help="Rank the gallery for one query.")
    p.add_argument('--index', required=True)
    p.add_argument('--query', type=int, required=True)
    p.add_argument('--attribute', type=int, required=True)
    p.add_argument('--k', type=int, default=10)
    p.add_argument('--lambda', dest='fusion', type=float, default=0.6)
    p.add_argument('--out', help="Rank file to write.")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser('eval', help="MAP and Recall@K of an index.")
    p.add_argument('--index', required=True)
    p.add_argument('--split', choices=(VAL, TEST))
    p.add_argument('--k', type=int, default=100)
    p.add_argument('--lambda', dest='fusion', type=float, default=0.6)
    p.add_argument('--recall', choices=(RECALL_HIT, RECALL_FRACTION), default=RECALL_HIT)
    p.add_argument('--random-baseline', type=int, metavar='SEED',
                   help="Also score seeded random vectors on the same entries.")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('rerank', help="Rerank the head of a baseline rank file.")
    p.add_argument('--index', required=True)
    p.add_argument('--baseline', required=True)
    p.add_argument('--attributes', type=_id_list, required=True)
    p.add_argument('--top-n', type=int, default=10)
    p.add_argument('--lambda', dest='fusion', type=float, default=0.6)
    p.add_argument('--out', help="Rank file to write.")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser('attention', help="Dump the spatial attention map and RoI of an image.")
    p.add_argument('--data', required=True)
    p.add_argument('--ckpt', required=True)
    p.add_argument('--image', type=int, required=True)
    p.add_argument('--attribute', type=int, required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_attention)

    p = sub.add_parser('selftest', help="Gradient and oracle checks.")
    p.add_argument('--quick', action='store_true')
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AttributeEmbeddingError as ex:
        LOG.error(str(ex))
        return 1


if __name__ == '__main__':
    sys.exit(main())
