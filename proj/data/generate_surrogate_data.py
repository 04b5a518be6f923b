#!/usr/bin/env python3
"""Writes seeded stand-ins for the LSAT and Pima datasets.

The real files are not redistributed here. These tables have the same
columns, value ranges and rough marginals so everything runs offline; drop
the real CSVs into a directory and point RECOURSE_DATA_DIR at it to use them
instead.
"""

import argparse
import pathlib

import numpy as np


def lsat(rng, n=2000):
    race = (rng.random(n) < 0.25).astype(int)  # 1 = black
    gpa = np.clip(rng.normal(3.25 - 0.25 * race, 0.4), 1.5, 4.2)
    score = np.clip(rng.normal(37.0 - 6.0 * race, 5.0), 11.0, 48.0)
    fya = (
        0.9 * (gpa - 3.2)
        + 0.6 * np.tanh((score - 36.0) / 8.0)
        - 0.4 * race
        + rng.normal(0.0, 0.75, n)
    )
    lines = ["GPA,LSAT,race,FYA"]
    for g, s, r, y in zip(gpa, score, race, fya):
        lines.append(f"{g:.2f},{s:.1f},{r},{y:.3f}")
    return "\n".join(lines) + "\n"


def pima(rng, n=768):
    age = np.clip(np.round(21 + rng.gamma(1.5, 8.0, n)), 21, 81).astype(int)
    preg = np.clip(rng.poisson(1.0 + 0.12 * (age - 21)), 0, 17)
    glucose = np.clip(np.round(rng.normal(121.0, 31.0, n)), 44, 199)
    bp = np.clip(np.round(rng.normal(72.0, 12.0, n)), 24, 122)
    skin = np.clip(np.round(rng.normal(29.0, 10.0, n)), 7, 99)
    insulin = np.clip(np.round(np.exp(rng.normal(np.log(125.0), 0.6, n))), 14, 846)
    bmi = np.clip(np.round(rng.normal(32.0, 6.8, n), 1), 18.2, 67.1)
    dpf = np.clip(np.round(np.exp(rng.normal(np.log(0.38), 0.6, n)), 3), 0.078, 2.42)
    # Missing readings are recorded as zeros, as in the original table.
    glucose[rng.random(n) < 0.007] = 0
    bp[rng.random(n) < 0.045] = 0
    skin[rng.random(n) < 0.30] = 0
    insulin[skin == 0] = 0
    insulin[rng.random(n) < 0.2] = 0
    bmi[rng.random(n) < 0.014] = 0

    g = np.where(glucose > 0, glucose, 121.0)
    b = np.where(bmi > 0, bmi, 32.0)
    logit = -9.0 + 0.036 * g + 0.085 * b + 0.11 * preg + 0.9 * dpf + 0.012 * (age - 21)
    outcome = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)

    lines = [
        "Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,"
        "DiabetesPedigreeFunction,Age,Outcome"
    ]
    for row in zip(preg, glucose, bp, skin, insulin, bmi, dpf, age, outcome):
        p, gl, bp_, sk, ins, bm, d, a, o = row
        lines.append(f"{p},{gl:.0f},{bp_:.0f},{sk:.0f},{ins:.0f},{bm:.1f},{d:.3f},{a},{o}")
    return "\n".join(lines) + "\n"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=pathlib.Path(__file__).resolve().parent, type=pathlib.Path)
    parser.add_argument("--seed", default=20171101, type=int)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    (args.out / "lsat.csv").write_text(lsat(rng))
    (args.out / "pima.csv").write_text(pima(rng))


if __name__ == "__main__":
    main()
