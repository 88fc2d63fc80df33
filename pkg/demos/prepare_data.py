"""Turn the public COMPAS and Adult downloads into CSVs the bundled schemas accept.

    python3 demos/prepare_data.py compas compas-scores-two-years.csv data/compas.csv
    python3 demos/prepare_data.py adult adult.data adult.test data/adult.csv

COMPAS rows are filtered the usual way (screening within 30 days of arrest,
known recidivism, no ordinary traffic offences) and restricted to
African-American and Caucasian defendants. The UCI Adult files have no
header, padded cells and, in ``adult.test``, a banner line and labels with a
trailing dot; all of that is normalized here.
"""

import csv
import sys

COMPAS_COLUMNS = ["sex", "age", "age_cat", "juv_fel_count", "juv_misd_count",
                  "juv_other_count", "priors_count", "c_charge_degree", "race",
                  "two_year_recid"]
ADULT_RAW = ["age", "workclass", "fnlwgt", "education", "educational-num", "marital-status",
             "occupation", "relationship", "race", "gender", "capital-gain", "capital-loss",
             "hours-per-week", "native-country", "income"]


def prepare_compas(src, dst):
    with open(src, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        idx = {name: header.index(name) for name in set(COMPAS_COLUMNS) |
               {"days_b_screening_arrest", "is_recid", "score_text"}}
        kept = 0
        with open(dst, "w", newline="", encoding="utf-8") as out:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(COMPAS_COLUMNS)
            for r in reader:
                days = r[idx["days_b_screening_arrest"]]
                if not days or abs(float(days)) > 30:
                    continue
                if r[idx["is_recid"]] == "-1" or r[idx["c_charge_degree"]] == "O":
                    continue
                if r[idx["score_text"]] == "N/A":
                    continue
                if r[idx["race"]] not in ("African-American", "Caucasian"):
                    continue
                w.writerow([r[idx[c]] for c in COMPAS_COLUMNS])
                kept += 1
    return kept


def prepare_adult(sources, dst):
    kept = 0
    with open(dst, "w", newline="", encoding="utf-8") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(ADULT_RAW)
        for src in sources:
            with open(src, newline="", encoding="utf-8") as fh:
                for r in csv.reader(fh):
                    cells = [c.strip() for c in r]
                    if len(cells) != len(ADULT_RAW):
                        continue  # blank lines and the adult.test banner
                    if cells[0] == "age":
                        continue  # an already-headed copy
                    cells[-1] = cells[-1].rstrip(".")
                    w.writerow(cells)
                    kept += 1
    return kept


if __name__ == "__main__":
    if len(sys.argv) < 4 or sys.argv[1] not in ("compas", "adult"):
        sys.exit(__doc__)
    if sys.argv[1] == "compas":
        n = prepare_compas(sys.argv[2], sys.argv[3])
    else:
        n = prepare_adult(sys.argv[2:-1], sys.argv[-1])
    print(f"wrote {n} rows to {sys.argv[-1]}")
