"""Sweep pruning thresholds over one similarity analysis and tabulate the
size/divergence trade-off, including a random-removal baseline at each
matched layer count.

Usage:
    python scripts/threshold_sweep.py --thresholds 0.9,0.95,0.99,0.999
"""

import argparse

from asc import (
    analyze,
    apply_plan,
    compare_models,
    gen_dataset,
    gen_model,
    plan,
    plan_random,
)


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--layers", type=int, default=8)
    parser.add_argument("--hidden-dim", type=int, default=32)
    parser.add_argument("--heads", type=int, default=4)
    parser.add_argument("--ffn-dim", type=int, default=64)
    parser.add_argument("--vocab", type=int, default=100)
    parser.add_argument("--identity", default="3,4,6",
                        help="comma-separated encoder layers planted as exact passthroughs")
    parser.add_argument("--thresholds", default="0.8,0.85,0.9,0.99,0.999")
    parser.add_argument("--sequences", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    return parser.parse_args()


def main():
    args = parse_args()
    identity = [int(p) for p in args.identity.split(",") if p.strip()]
    thresholds = [float(t) for t in args.thresholds.split(",")]

    config, weights = gen_model(
        num_layers=args.layers, hidden_dim=args.hidden_dim, num_heads=args.heads,
        ffn_dim=args.ffn_dim, vocab_size=args.vocab, identity_layers=identity,
        seed=args.seed, max_seq_len=32,
    )
    train = gen_dataset(args.sequences, 8, 32, args.vocab, seed=args.seed + 1)
    heldout = gen_dataset(args.sequences, 8, 32, args.vocab, seed=args.seed + 2)
    matrix = analyze(config, weights, train, workers=4)
    print(f"{args.layers}-layer model, identity layers {identity}, "
          f"{matrix.token_count} analysis tokens\n")
    print(f"{'threshold':>10} {'pruned':>7} {'layers':<16} {'mean cos':>9} "
          f"{'rand mean cos':>14}")

    for threshold in thresholds:
        result = plan(matrix, threshold)
        pruned_config, pruned_weights = apply_plan(config, weights, result)
        report = compare_models(config, weights, pruned_config, pruned_weights, heldout)
        count = len(result.redundant_layers)
        baseline = plan_random(args.layers, count, seed=args.seed + 3)
        base_config, base_weights = apply_plan(config, weights, baseline)
        base_report = compare_models(config, weights, base_config, base_weights, heldout)
        layers = ",".join(str(i) for i in result.redundant_layers) or "-"
        print(f"{threshold:>10} {count:>7} {layers:<16} {report.mean_cosine:>9.5f} "
              f"{base_report.mean_cosine:>14.5f}")


if __name__ == "__main__":
    main()
