"""Regenerate the fixture microdata and human benchmark files.

The files are synthetic stand-ins with realistic shape; they are not the
survey or experiment data. Output is deterministic for a given seed.
"""
import csv
import pathlib
import sys

import numpy as np

INDICATORS = [
    "Reciprocity: High", "Reciprocity: Low", "Altruism", "Trust",
    "Anti-social Punishment", "Pro-social Punishment", "Patience",
    "Dislike Having More", "Dislike Having Less", "WTP",
    "Risk Aversion: CR (Certain)", "Risk Aversion: CR (Lottery)",
    "WTA", "Risk Aversion: Gains", "Risk Aversion: Losses", "Risk Aversion: Gain/Loss",
    "Ambiguity Aversion", "Compound Lottery Aversion",
    "Overestimation", "Overplacement", "Overprecision",
]

# persona shown in the proposer prompt example
EXAMPLE = {
    "Reciprocity: High": -0.1254847674509733,
    "Anti-social Punishment": 0.8201827598505876,
    "Risk Aversion: Gains": 0.1056063995538051,
    "Risk Aversion: CR (Certain)": -0.6871043035159886,
    "Ambiguity Aversion": -0.23977249139149004,
    "Overprecision": 0.48407670683235493,
}


def main(out_dir: pathlib.Path, n: int = 1000, seed: int = 20250601) -> None:
    rng = np.random.default_rng(seed)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "personas_1000.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["persona_id", *INDICATORS, "crt_score", "age", "gender", "country"])
        for i in range(n):
            values = {name: float(v) for name, v in zip(INDICATORS, rng.standard_normal(len(INDICATORS)))}
            crt = int(rng.integers(0, 4))
            age = int(rng.integers(18, 81))
            gender = "female" if rng.random() < 0.5 else "male"
            if i == 0:
                values.update(EXAMPLE)
                crt, age, gender = 1, 50, "female"
            w.writerow([f"P{i:04d}", *(repr(values[k]) for k in INDICATORS), crt, age, gender, "US"])

    support = np.array([0, 10, 20, 25, 30, 35, 40, 45, 50, 60])
    weights = np.array([0.02, 0.04, 0.07, 0.04, 0.10, 0.05, 0.18, 0.08, 0.38, 0.04])
    weights = weights / weights.sum()

    proposer = rng.choice(support, size=n, p=weights)
    (out_dir / "human_proposer.txt").write_text("".join(f"{o}\n" for o in proposer))

    offers = rng.choice(support, size=n, p=weights)
    accept_p = 1.0 / (1.0 + np.exp(-(offers - 25) / 6.0))
    accepted = rng.random(n) < accept_p
    with open(out_dir / "human_responder.csv", "w") as f:
        f.write("offer,decision\n")
        for o, a in zip(offers, accepted):
            f.write(f"{o},{'accept' if a else 'reject'}\n")
    (out_dir / "responder_offers.txt").write_text("".join(f"{o}\n" for o in offers))


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures"))
