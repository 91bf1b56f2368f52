"""Reference values for the paired t-test and one-way repeated-measures ANOVA.

Uses scipy.stats.ttest_rel and statsmodels AnovaRM; generalized eta squared is
computed from the textbook sums of squares with numpy. Run once and commit the
output (stats_fixtures.json); the Rust tests never call back into Python.
"""
import json

import numpy as np
import pandas as pd
from scipy import stats
from statsmodels.stats.anova import AnovaRM

rng = np.random.default_rng(20260419)

paired = []
paired.append({"x": [1.0, 2.0, 3.0], "y": [0.0, 0.0, 0.0]})
for n, shift, scale in [(2, 0.5, 1.0), (4, 0.0, 2.0), (5, 1.2, 0.7), (6, -3.0, 4.0),
                        (8, 0.1, 0.05), (9, 2.5, 3.0), (9, -0.4, 1.0), (12, 10.0, 25.0),
                        (20, 0.0, 1.0), (30, 0.3, 1.5), (9, 39.45, 11.0)]:
    y = rng.normal(50.0, 10.0, n)
    x = y + shift + rng.normal(0.0, scale, n)
    paired.append({"x": [float(v) for v in x], "y": [float(v) for v in y]})

for case in paired:
    x = np.array(case["x"]); y = np.array(case["y"])
    res = stats.ttest_rel(x, y)
    case["t"] = float(res.statistic)
    case["df"] = float(len(x) - 1)
    case["p"] = float(res.pvalue)
    case["mean_diff"] = float(np.mean(x - y))


def ges(m):
    s, c = m.shape
    g = m.mean()
    ss_cond = s * ((m.mean(axis=0) - g) ** 2).sum()
    ss_subj = c * ((m.mean(axis=1) - g) ** 2).sum()
    ss_tot = ((m - g) ** 2).sum()
    ss_err = ss_tot - ss_cond - ss_subj
    return ss_cond / (ss_cond + ss_subj + ss_err)


anova = []
shapes = [(3, 2), (5, 2), (9, 2), (12, 2), (4, 3), (9, 3), (9, 3), (9, 4), (9, 4), (6, 5), (15, 4), (9, 4)]
for i, (s, c) in enumerate(shapes):
    subj = rng.normal(0.0, 5.0, (s, 1))
    effect = rng.normal(0.0, 1.0 + i % 3, (1, c))
    m = 20.0 + subj + effect + rng.normal(0.0, 2.0, (s, c))
    rows = [{"subject": a, "cond": b, "v": float(m[a, b])} for a in range(s) for b in range(c)]
    fit = AnovaRM(pd.DataFrame(rows), "v", "subject", within=["cond"]).fit()
    tab = fit.anova_table
    anova.append({
        "values": [[float(v) for v in row] for row in m],
        "f": float(tab["F Value"].iloc[0]),
        "df1": float(tab["Num DF"].iloc[0]),
        "df2": float(tab["Den DF"].iloc[0]),
        "p": float(tab["Pr > F"].iloc[0]),
        "ges": float(ges(m)),
    })

with open("stats_fixtures.json", "w") as fh:
    json.dump({"paired_t": paired, "rm_anova": anova}, fh, indent=1)
    fh.write("\n")
