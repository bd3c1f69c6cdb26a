import { Score } from "./session.js";

/**
 * Keyboard shortcuts for the three-level scale: 1 exact match,
 * 5 semantic match (0.5), 0 no match. Returns null for anything else.
 */
export function scoreForKey(key: string): Score | null {
    switch (key) {
        case "1":
            return 1;
        case "5":
            return 0.5;
        case "0":
            return 0;
        default:
            return null;
    }
}
