"""Regenerate the bundled three-treebank UD-style fixture (deterministic)."""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from synthetic import random_sentence  # noqa: E402

from edvkit.conllu_io import write_file  # noqa: E402

SPECS = {"UD_Toy_Left-A": (-2.0, 40), "UD_Toy_Right-B": (2.0, 80), "UD_Toy_Mixed-C": (0.0, 25)}
SIZES = {"train": 60, "dev": 15, "test": 20}

if __name__ == "__main__":
    root = Path(__file__).resolve().parent / "ud"
    for k, (name, (bias, lemmas)) in enumerate(sorted(SPECS.items())):
        code = name.split("-")[1].lower()
        for j, (split, size) in enumerate(SIZES.items()):
            rng = np.random.default_rng(100 * k + j)
            sents = [random_sentence(rng, int(rng.integers(3, 20)), bias if split != "test" else bias / 2,
                                     lemmas, sent_id=f"{split}-{i}") for i in range(size)]
            (root / name).mkdir(parents=True, exist_ok=True)
            write_file(sents, root / name / f"{code}-ud-{split}.conllu")
