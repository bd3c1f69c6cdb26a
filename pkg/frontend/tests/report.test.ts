import { describe, expect, it } from "vitest";

import { AgreementReport } from "../src/api";
import { scoreForKey } from "../src/keys";
import { reportRows } from "../src/report";

const REPORT: AgreementReport = {
    rated_total: 20,
    score_counts: { "0.0": 4, "0.5": 6, "1.0": 10 },
    label_counts: { "0.0": { male: 4 }, "0.5": { female: 6 }, "1.0": { music: 10 } },
    accuracy: 0.8,
    annotator_accuracy: { ana: 0.85, ben: 0.75 },
    kappa: { "ana|ben": 0.6364 },
};

describe("reportRows", () => {
    it("passes the server's numbers through verbatim", () => {
        const rows = reportRows(REPORT);
        const byName = Object.fromEntries(rows.map((r) => [r.name, r.value]));
        expect(byName["pairs rated"]).toBe("20");
        expect(byName["accuracy"]).toBe("0.800");
        expect(byName["exact match (1)"]).toBe("10");
        expect(byName["semantic match (0.5)"]).toBe("6");
        expect(byName["no match (0)"]).toBe("4");
        expect(byName["ana"]).toBe("0.850");
        expect(byName["ana vs ben"]).toBe("0.6364");
    });

    it("derives nothing: dropping a count changes only that row", () => {
        const partial = { ...REPORT, score_counts: { "1.0": 10 } };
        const rows = reportRows(partial);
        const names = rows.map((r) => r.name);
        expect(names).toContain("exact match (1)");
        expect(names).not.toContain("no match (0)");
        // accuracy still shows the server's figure, not a recomputation
        expect(rows.find((r) => r.name === "accuracy")?.value).toBe("0.800");
    });
});

describe("scoreForKey", () => {
    it("maps the documented shortcuts 1 / 5 / 0", () => {
        expect(scoreForKey("1")).toBe(1);
        expect(scoreForKey("5")).toBe(0.5);
        expect(scoreForKey("0")).toBe(0);
    });

    it("ignores every other key", () => {
        for (const key of ["2", "a", "Enter", " ", "Escape"]) {
            expect(scoreForKey(key)).toBeNull();
        }
    });
});
