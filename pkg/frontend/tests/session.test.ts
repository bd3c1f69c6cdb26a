import { describe, expect, it } from "vitest";

import {
    PairView,
    QueueState,
    RatingSubmission,
    ReviewApi,
} from "../src/api";
import { ReviewSession } from "../src/session";

function pair(id: string): PairView {
    return {
        pair_id: id,
        kind: "one-to-one",
        score: 1.0,
        label: "female",
        left: {
            track: "D1", language: "tr", duration_ms: 4000,
            texts: ["merhaba"], translation: "marhaban",
            audio_url: `/api/pairs/${id}/audio/left`,
        },
        right: {
            track: "D2", language: "ar", duration_ms: 4200,
            texts: ["marhaban"], translation: null,
            audio_url: `/api/pairs/${id}/audio/right`,
        },
    };
}

/** Serves a fixed queue the way the service does: next unrated, in order. */
class FakeApi implements ReviewApi {
    submitted: RatingSubmission[] = [];
    failNextSubmit = false;
    failNextFetch = false;

    constructor(private queue: PairView[]) {}

    async fetchNext(annotator: string): Promise<QueueState> {
        if (this.failNextFetch) {
            this.failNextFetch = false;
            throw new Error("socket closed");
        }
        const ratedHere = new Set(
            this.submitted.filter((s) => s.annotator === annotator).map((s) => s.pair_id),
        );
        const pending = this.queue.filter((p) => !ratedHere.has(p.pair_id));
        return {
            annotator,
            total: this.queue.length,
            completed: this.queue.length - pending.length,
            done: pending.length === 0,
            pair: pending[0] ?? null,
        };
    }

    async submitRating(body: RatingSubmission): Promise<void> {
        if (this.failNextSubmit) {
            this.failNextSubmit = false;
            throw new Error("gateway timeout");
        }
        this.submitted.push(body);
    }

    async fetchReport() {
        return null;
    }
}

describe("ReviewSession", () => {
    it("walks the queue next -> rate -> next until done", async () => {
        const api = new FakeApi([pair("p1"), pair("p2"), pair("p3")]);
        const session = new ReviewSession(api, "ana");
        await session.start();
        expect(session.phase).toBe("rating");
        expect(session.pair?.pair_id).toBe("p1");
        expect(session.total).toBe(3);

        await session.rate(1);
        expect(session.pair?.pair_id).toBe("p2");
        await session.rate(0.5);
        await session.rate(0);

        expect(session.phase).toBe("done");
        expect(session.pair).toBeNull();
        expect(session.completed).toBe(3);
        expect(api.submitted).toEqual([
            { pair_id: "p1", annotator: "ana", score: 1 },
            { pair_id: "p2", annotator: "ana", score: 0.5 },
            { pair_id: "p3", annotator: "ana", score: 0 },
        ]);
    });

    it("advances optimistically before the POST resolves", async () => {
        const api = new FakeApi([pair("p1"), pair("p2")]);
        let release!: () => void;
        const gate = new Promise<void>((resolve) => (release = resolve));
        const slowSubmit = api.submitRating.bind(api);
        api.submitRating = async (body) => {
            await gate;
            return slowSubmit(body);
        };

        const session = new ReviewSession(api, "ana");
        await session.start();
        const inflight = session.rate(1);

        // the POST has not landed yet, but the UI already moved on
        expect(session.phase).toBe("submitting");
        expect(session.completed).toBe(1);
        expect(session.pair).toBeNull();

        release();
        await inflight;
        expect(session.pair?.pair_id).toBe("p2");
        expect(session.completed).toBe(1); // now the server's own count
    });

    it("rolls back and re-presents the pair when the POST fails", async () => {
        const api = new FakeApi([pair("p1"), pair("p2")]);
        const session = new ReviewSession(api, "ana");
        await session.start();

        api.failNextSubmit = true;
        await session.rate(1);

        expect(session.phase).toBe("rating");
        expect(session.pair?.pair_id).toBe("p1"); // nothing skipped
        expect(session.completed).toBe(0);
        expect(session.submitError?.pair_id).toBe("p1");
        expect(api.submitted).toEqual([]);

        // the retry succeeds and clears the banner
        await session.rate(1);
        expect(session.submitError).toBeNull();
        expect(session.pair?.pair_id).toBe("p2");
        expect(session.completed).toBe(1);
    });

    it("surfaces queue failures with a working retry", async () => {
        const api = new FakeApi([pair("p1")]);
        api.failNextFetch = true;
        const session = new ReviewSession(api, "ana");
        await session.start();
        expect(session.phase).toBe("failed");
        expect(session.fetchError).toContain("socket closed");

        await session.retry();
        expect(session.phase).toBe("rating");
        expect(session.pair?.pair_id).toBe("p1");
    });

    it("ignores rate() outside the rating phase", async () => {
        const api = new FakeApi([]);
        const session = new ReviewSession(api, "ana");
        await session.start();
        expect(session.phase).toBe("done");
        await session.rate(1);
        expect(api.submitted).toEqual([]);
    });

    it("resumes mid-queue counts after a reload", async () => {
        const api = new FakeApi([pair("p1"), pair("p2"), pair("p3")]);
        const first = new ReviewSession(api, "ana");
        await first.start();
        await first.rate(1);
        await first.rate(1);

        // a fresh session (page refresh) sees the server-side progress
        const second = new ReviewSession(api, "ana");
        await second.start();
        expect(second.completed).toBe(2);
        expect(second.pair?.pair_id).toBe("p3");
    });

    it("tracks annotators independently", async () => {
        const api = new FakeApi([pair("p1"), pair("p2")]);
        const ana = new ReviewSession(api, "ana");
        await ana.start();
        await ana.rate(1);

        const ben = new ReviewSession(api, "ben");
        await ben.start();
        expect(ben.completed).toBe(0);
        expect(ben.pair?.pair_id).toBe("p1");
    });

    it("rejects an empty annotator id", () => {
        expect(() => new ReviewSession(new FakeApi([]), "")).toThrow();
    });
});
