/**
 * Flatten the agreement report into display rows. Every number comes
 * from the server verbatim; this module never aggregates or derives
 * anything, so the report on screen is exactly the report on disk.
 */

import { AgreementReport } from "./api.js";

export interface ReportRow {
    section: string;
    name: string;
    value: string;
}

const SCORE_NAMES: Record<string, string> = {
    "0.0": "no match (0)",
    "0.5": "semantic match (0.5)",
    "1.0": "exact match (1)",
};

export function reportRows(report: AgreementReport): ReportRow[] {
    const rows: ReportRow[] = [
        { section: "overall", name: "pairs rated", value: String(report.rated_total) },
        { section: "overall", name: "accuracy", value: report.accuracy.toFixed(3) },
    ];
    for (const [score, count] of Object.entries(report.score_counts)) {
        rows.push({
            section: "consensus scores",
            name: SCORE_NAMES[score] ?? score,
            value: String(count),
        });
    }
    for (const [annotator, accuracy] of Object.entries(report.annotator_accuracy)) {
        rows.push({
            section: "per annotator",
            name: annotator,
            value: accuracy.toFixed(3),
        });
    }
    for (const [pair, kappa] of Object.entries(report.kappa)) {
        rows.push({
            section: "agreement (kappa)",
            name: pair.replace("|", " vs "),
            value: kappa.toFixed(4),
        });
    }
    return rows;
}
