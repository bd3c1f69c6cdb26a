/**
 * Rating queue state machine: next -> play -> rate -> submit -> next.
 *
 * The server is the source of truth for the queue and every counter;
 * this class only tracks the pair on screen. Submissions advance
 * optimistically (the progress bar moves before the POST resolves) and
 * roll back to the same pair when the POST fails, so nothing is ever
 * skipped silently.
 */

import { PairView, ReviewApi } from "./api.js";

export type Score = 0 | 0.5 | 1;

export type Phase =
    | "idle"        // before start()
    | "loading"     // waiting on the queue
    | "rating"      // a pair is on screen
    | "submitting"  // POST in flight, already advanced optimistically
    | "done"        // queue exhausted
    | "failed";     // a queue fetch failed; retry() re-asks

export interface SubmitError {
    pair_id: string;
    message: string;
}

export class ReviewSession {
    phase: Phase = "idle";
    pair: PairView | null = null;
    completed = 0;
    total = 0;
    /** Set when a submission bounced; the same pair is back on screen. */
    submitError: SubmitError | null = null;
    /** Set when the queue itself is unreachable. */
    fetchError: string | null = null;

    constructor(
        private readonly api: ReviewApi,
        readonly annotator: string,
    ) {
        if (!annotator) {
            throw new Error("annotator id must be non-empty");
        }
    }

    async start(): Promise<void> {
        await this.advance();
    }

    /** Re-ask the server after a failed fetch; harmless otherwise. */
    async retry(): Promise<void> {
        await this.advance();
    }

    private async advance(): Promise<void> {
        this.phase = "loading";
        this.fetchError = null;
        let state;
        try {
            state = await this.api.fetchNext(this.annotator);
        } catch (err) {
            this.phase = "failed";
            this.fetchError = err instanceof Error ? err.message : String(err);
            return;
        }
        this.completed = state.completed;
        this.total = state.total;
        if (state.done || state.pair === null) {
            this.phase = "done";
            this.pair = null;
        } else {
            this.phase = "rating";
            this.pair = state.pair;
        }
    }

    /**
     * Submit a score for the pair on screen.
     *
     * The counter moves immediately; if the POST fails the counter
     * moves back and the pair is re-presented with the error attached.
     */
    async rate(score: Score): Promise<void> {
        if (this.phase !== "rating" || this.pair === null) {
            return; // double-click or a shortcut outside the flow
        }
        const rated = this.pair;
        this.submitError = null;
        this.phase = "submitting";
        this.pair = null;
        this.completed += 1;
        try {
            await this.api.submitRating({
                pair_id: rated.pair_id,
                annotator: this.annotator,
                score,
            });
        } catch (err) {
            this.completed -= 1;
            this.pair = rated;
            this.phase = "rating";
            this.submitError = {
                pair_id: rated.pair_id,
                message: err instanceof Error ? err.message : String(err),
            };
            return;
        }
        await this.advance(); // server counters replace the optimistic ones
    }
}
