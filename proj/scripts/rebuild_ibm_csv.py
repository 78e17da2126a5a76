#!/usr/bin/env python3
"""Rebuild the IBM HR Analytics attrition CSV (Kaggle layout, 35 columns).

The `rdatasets` package ships the R `modeldata::attrition` copy of the same
1470 records. That copy turned the ordinal survey columns into labelled
factors, replaced spaces with underscores and dropped the four constant or
identifier columns. This script reverses those edits so the output matches
the original `WA_Fn-UseC_-HR-Employee-Attrition.csv` column for column.

Usage:  pip install rdatasets && python3 scripts/rebuild_ibm_csv.py data/ibm_hr_attrition.csv
"""
import csv
import sys

import rdatasets

COLUMNS = [
    "Age", "Attrition", "BusinessTravel", "DailyRate", "Department",
    "DistanceFromHome", "Education", "EducationField", "EmployeeCount",
    "EmployeeNumber", "EnvironmentSatisfaction", "Gender", "HourlyRate",
    "JobInvolvement", "JobLevel", "JobRole", "JobSatisfaction",
    "MaritalStatus", "MonthlyIncome", "MonthlyRate", "NumCompaniesWorked",
    "Over18", "OverTime", "PercentSalaryHike", "PerformanceRating",
    "RelationshipSatisfaction", "StandardHours", "StockOptionLevel",
    "TotalWorkingYears", "TrainingTimesLastYear", "WorkLifeBalance",
    "YearsAtCompany", "YearsInCurrentRole", "YearsSinceLastPromotion",
    "YearsWithCurrManager",
]

SATISFACTION = {"Low": 1, "Medium": 2, "High": 3, "Very_High": 4}
ORDINAL = {
    "Education": {"Below_College": 1, "College": 2, "Bachelor": 3, "Master": 4, "Doctor": 5},
    "EnvironmentSatisfaction": SATISFACTION,
    "JobInvolvement": SATISFACTION,
    "JobSatisfaction": SATISFACTION,
    "RelationshipSatisfaction": SATISFACTION,
    "PerformanceRating": {"Low": 1, "Good": 2, "Excellent": 3, "Outstanding": 4},
    "WorkLifeBalance": {"Bad": 1, "Good": 2, "Better": 3, "Best": 4},
}
TEXT = {"Department", "EducationField", "JobRole"}
RENAMES = {"Research_Development": "Research & Development"}


def main(out_path):
    df = rdatasets.data("modeldata", "attrition")
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for _, r in df.iterrows():
            row = []
            for c in COLUMNS:
                if c == "EmployeeCount":
                    v = 1
                elif c == "EmployeeNumber":
                    v = int(r["rownames"])
                elif c == "Over18":
                    v = "Y"
                elif c == "StandardHours":
                    v = 80
                elif c in ORDINAL:
                    v = ORDINAL[c][r[c]]
                elif c in TEXT:
                    v = RENAMES.get(r[c], str(r[c]).replace("_", " "))
                else:
                    v = r[c]
                row.append(v)
            w.writerow(row)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/ibm_hr_attrition.csv")
