#!/usr/bin/env python3
"""Produce the golden artifacts for the scripted dou session and the grade
fixture by an independent path: stdlib csv + hand-written value dictionaries,
no harmonkit imports. Outputs are committed under tests/golden/ after review.
"""

import csv
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = ROOT / "tests" / "golden"

COLUMNS = [
    "Country", "Histologic_Grade_FIGO", "Histologic_type", "FIGO_stage", "BMI",
    "Age", "Race", "Ethnicity", "Gender", "Tumor_Focality", "Tumor_Size_cm",
]

# target attribute and value dictionary per source column (None = rename)
PLAN = [
    ("Country", "country_of_birth", {
        "Poland": "Poland", "Ukraine": "Ukraine", "United States": "United States",
    }),
    ("Histologic_Grade_FIGO", "tumor_grade", {
        "FIGO grade 1": "G1", "FIGO grade 2": "G2", "FIGO grade 3": "G3",
    }),
    ("Histologic_type", "primary_diagnosis", {
        "Carcinosarcoma": "Carcinosarcoma, NOS",
        "Clear cell": "Clear cell adenocarcinoma, NOS",
        "Endometrioid": "Endometrioid adenocarcinoma, NOS",
        "Serous": "Serous cystadenocarcinoma, NOS",
    }),
    ("FIGO_stage", "figo_stage", {
        "II": "Stage II", "IIIA": "Stage IIIA", "IIIB": "Stage IIIB",
    }),
    ("BMI", "bmi", None),
    ("Age", "age", None),
    ("Race", "race", {
        "Asian": "asian",
        "Black or African-American": "black or african american",
        "White": "white",
    }),
    ("Ethnicity", "ethnicity", {
        "Hispanic or Latino": "hispanic or latino",
        "Not-Hispanic or Latino": "not hispanic or latino",
    }),
    ("Gender", "gender", {"Female": "female"}),
    ("Tumor_Focality", "tumor_focality", {
        "Multifocal": "Multifocal", "Unifocal": "Unifocal",
    }),
    ("Tumor_Size_cm", "tumor_largest_dimension_diameter", None),
]


def render_field(value):
    if value is None:
        return ""
    if value == "":
        return '""'
    if any(ch in value for ch in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def render_csv(header, rows):
    lines = [",".join(render_field(h) for h in header)]
    for row in rows:
        lines.append(",".join(render_field(cell) for cell in row))
    return ("\r\n".join(lines) + "\r\n").encode("utf-8")


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        # fixture carries no quoted-empty fields, so '' means absent
        return header, [[cell if cell != "" else None for cell in row] for row in reader]


def spec_json():
    entries = []
    for source, target, mapping in PLAN:
        entry = {"source": source, "target": target}
        if mapping is not None:
            entry["matches"] = [[k, v] for k, v in sorted(mapping.items())]
        entries.append(entry)
    return json.dumps(entries, indent=2, ensure_ascii=False) + "\n"


def harmonize_dou():
    header, rows = read_rows(FIXTURES / "dou.csv")
    index = {name: header.index(name) for name in COLUMNS}
    out_header = [target for _, target, _ in PLAN]
    out_rows = []
    for row in rows:
        out = []
        for source, _, mapping in PLAN:
            cell = row[index[source]]
            if mapping is None or cell is None:
                out.append(cell)
            else:
                out.append(mapping.get(cell, cell))
        out_rows.append(out)
    return render_csv(out_header, out_rows)


def harmonize_grades():
    header, rows = read_rows(FIXTURES / "grades6.csv")
    grade_map = {"FIGO grade 1": "G1", "FIGO grade 2": "G2", "FIGO grade 3": "G3"}
    out_rows = [[grade_map.get(row[0], row[0])] for row in rows]
    return render_csv(["tumor_grade"], out_rows)


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    (GOLDEN / "dou.mapping.json").write_text(spec_json(), encoding="utf-8")
    (GOLDEN / "dou_harmonized.csv").write_bytes(harmonize_dou())
    (GOLDEN / "grades6_harmonized.csv").write_bytes(harmonize_grades())
    print("wrote dou.mapping.json, dou_harmonized.csv, grades6_harmonized.csv")


if __name__ == "__main__":
    main()
