/**
 * Typed client for the rating service. The shapes below mirror the
 * service's JSON payloads exactly; nothing is renamed or recomputed on
 * the way through.
 */

export interface PairSide {
    track: string;
    language: string;
    duration_ms: number;
    texts: string[];
    translation: string | null;
    audio_url: string;
}

export interface PairView {
    pair_id: string;
    kind: string;
    score: number;
    label: string;
    left: PairSide;
    right: PairSide;
}

export interface QueueState {
    annotator: string;
    total: number;
    completed: number;
    done: boolean;
    pair: PairView | null;
}

export interface RatingSubmission {
    pair_id: string;
    annotator: string;
    score: number;
}

export interface AgreementReport {
    rated_total: number;
    score_counts: Record<string, number>;
    label_counts: Record<string, Record<string, number>>;
    accuracy: number;
    annotator_accuracy: Record<string, number>;
    kappa: Record<string, number>;
}

/** What the session controller needs; tests substitute a fake. */
export interface ReviewApi {
    fetchNext(annotator: string): Promise<QueueState>;
    submitRating(body: RatingSubmission): Promise<void>;
    fetchReport(): Promise<AgreementReport | null>;
}

export class HttpApi implements ReviewApi {
    constructor(private readonly base: string = "") {}

    async fetchNext(annotator: string): Promise<QueueState> {
        const url = `${this.base}/api/pairs/next?annotator=${encodeURIComponent(annotator)}`;
        const res = await fetch(url);
        if (!res.ok) {
            throw new Error(`queue request failed (${res.status})`);
        }
        return (await res.json()) as QueueState;
    }

    async submitRating(body: RatingSubmission): Promise<void> {
        const res = await fetch(`${this.base}/api/ratings`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!res.ok) {
            throw new Error(`rating rejected (${res.status})`);
        }
    }

    async fetchReport(): Promise<AgreementReport | null> {
        const res = await fetch(`${this.base}/api/report`);
        if (res.status === 404) {
            return null; // nothing rated yet
        }
        if (!res.ok) {
            throw new Error(`report request failed (${res.status})`);
        }
        return (await res.json()) as AgreementReport;
    }
}
