#!/usr/bin/env python3
"""Writes the UCI Wisconsin Diagnostic Breast Cancer table as a headed CSV.

Uses the copy bundled with scikit-learn. The label column `malignant` is 1 for
malignant tumours and 0 for benign ones.
"""
import csv
import sys

from sklearn.datasets import load_breast_cancer


def main(path):
    data = load_breast_cancer()
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(data.feature_names) + ["malignant"])
        for row, target in zip(data.data, data.target):
            writer.writerow([repr(float(v)) for v in row] + [1 if target == 0 else 0])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/wdbc.csv")
