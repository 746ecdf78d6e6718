#!/usr/bin/env python3
"""Generate the two cohort CSV fixtures (153 and 190 rows) deterministically.

Committed outputs live in tests/fixtures/; rerunning this script reproduces
them byte for byte.
"""

import random
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

GRADES_T1 = ["FIGO grade 1", "FIGO grade 2", "FIGO grade 3"]
GRADES_T2 = [
    "G1 Well differentiated",
    "G2 Moderately differentiated",
    "G3 Poorly differentiated",
]
COUNTRIES = ["United States", "Poland", "Ukraine", "Other"]


def cohort_t1(rows: int) -> str:
    rng = random.Random(101)
    lines = ["Sample_ID,Histologic_Grade_FIGO,Country,Age"]
    for i in range(rows):
        lines.append(
            f"C1-{i + 1:04d},{rng.choice(GRADES_T1)},{rng.choice(COUNTRIES)},{rng.randint(35, 85)}"
        )
    return "\n".join(lines) + "\n"


def cohort_t2(rows: int) -> str:
    rng = random.Random(202)
    lines = ["Sample_ID,Histologic_grade,BMI"]
    for i in range(rows):
        lines.append(f"C2-{i + 1:04d},{rng.choice(GRADES_T2)},{rng.uniform(18.0, 42.0):.1f}")
    return "\n".join(lines) + "\n"


def main():
    (FIXTURES / "cohort_t1.csv").write_text(cohort_t1(153), encoding="utf-8")
    (FIXTURES / "cohort_t2.csv").write_text(cohort_t2(190), encoding="utf-8")
    print("wrote cohort_t1.csv (153 rows), cohort_t2.csv (190 rows)")


if __name__ == "__main__":
    main()
