"""Train Baseline and Sum once and draw their label embeddings.

For each mode writes <mode>.ckpt, <mode>_pca.svg, <mode>_tsne.svg and the
projection TSVs, then prints span and top-layer silhouettes on the raw
embeddings and on both projections.
"""
import argparse
from pathlib import Path

from labelcomp.corpus import SyntheticSpec, generate_synthetic
from labelcomp.projection import project, silhouette, write_projection_tsv, write_svg
from labelcomp.trainer import TrainConfig, train


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/embeddings")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--epochs", type=int, default=20)
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_c, dev_c, _, schema = generate_synthetic(SyntheticSpec())
    labels = list(schema.labels)
    for mode in ("baseline", "sum"):
        run = train(train_c, dev_c, schema, TrainConfig(mode=mode, seed=args.seed, epochs=args.epochs))
        run.model.save(out / f"{mode}.ckpt")
        W = run.model.label_matrix()
        results = {m: project(W, labels, m, seed=args.seed) for m in ("pca", "tsne")}
        for m, res in results.items():
            write_projection_tsv(res, out / f"{mode}_{m}.tsv")
            write_svg(res, out / f"{mode}_{m}.svg")
        groups = results["pca"]
        for grouping, g in (("span", groups.span_groups), ("top", groups.top_groups)):
            raw = silhouette(W, g)[0]
            on = {m: silhouette(r.coords, g)[0] for m, r in results.items()}
            print(f"{mode:8s} {grouping:4s} silhouette raw {raw:+.3f}  pca {on['pca']:+.3f}  tsne {on['tsne']:+.3f}")


if __name__ == "__main__":
    main()
