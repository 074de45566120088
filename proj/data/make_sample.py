#!/usr/bin/env python3
# Regenerates admissions.csv, a small synthetic table laid out like the
# data dictionary in admissions.dict.json.
import random

rng = random.Random(20260)
blocks = [("parents", 3), ("has_nurs", 5), ("assessment_completed", 4), ("children", 4)]
rows = []
for i in range(400):
    cats = {name: rng.randrange(k) for name, k in blocks}
    af = 1 if rng.random() < 0.3 else 0
    age = round(rng.uniform(18, 90), 1)
    admit = cats["parents"] == 0 or (cats["children"] >= 2 and af == 1) or age > 80
    if rng.random() < 0.1:
        admit = not admit
    cells = []
    for name, k in blocks:
        cells += ["1" if cats[name] == j else "0" for j in range(k)]
    cells += [str(af), repr(age)]
    rows.append(",".join([f"p{i:04d}"] + cells + ["yes" if admit else "no"]))

header = ["group_id"]
for name, k in blocks:
    header += [f"{name}_{j}" for j in range(k)]
header += ["atrialfibrillation", "age", "admit"]
with open("admissions.csv", "w") as f:
    f.write(",".join(header) + "\n" + "\n".join(rows) + "\n")
