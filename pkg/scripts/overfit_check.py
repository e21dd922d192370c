"""Capacity check: each mode should memorise a 50-sentence corpus."""
import argparse
import time

from labelcomp.composition import CompositionMode
from labelcomp.corpus import SyntheticSpec, generate_synthetic
from labelcomp.trainer import TrainConfig, fit_to_accuracy


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sentences", type=int, default=50)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    corpus, _, _, schema = generate_synthetic(SyntheticSpec(n_train=args.sentences, n_dev=1, n_test=1,
                                                            seed=args.seed))
    for mode in CompositionMode:
        t0 = time.perf_counter()
        _, epochs, acc = fit_to_accuracy(corpus, schema, TrainConfig(mode=mode, seed=args.seed),
                                         max_epochs=args.max_epochs)
        print(f"{mode.value:9s} accuracy {100 * acc:6.2f}%  epochs {epochs:4d}  {time.perf_counter() - t0:6.1f}s")


if __name__ == "__main__":
    main()
