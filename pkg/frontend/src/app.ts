/**
 * DOM wiring for the review app. Two views share one page: the rating
 * queue (default) and the agreement report (#report). All state lives
 * in ReviewSession; this file only paints it.
 */

import { HttpApi, PairSide } from "./api.js";
import { scoreForKey } from "./keys.js";
import { reportRows } from "./report.js";
import { ReviewSession, Score } from "./session.js";

const api = new HttpApi();
let session: ReviewSession | null = null;

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing element #${id}`);
    }
    return node as T;
}

function show(id: string, visible: boolean): void {
    el(id).style.display = visible ? "" : "none";
}

function sideHtml(title: string, side: PairSide): string {
    const texts = side.texts.map((t) => `<p class="text">${escapeHtml(t)}</p>`).join("");
    const translation = side.translation
        ? `<p class="translation">${escapeHtml(side.translation)}</p>`
        : "";
    const seconds = (side.duration_ms / 1000).toFixed(1);
    return `
      <div class="side">
        <h3>${title} · ${escapeHtml(side.track)} (${escapeHtml(side.language)}, ${seconds} s)</h3>
        <audio controls preload="none" src="${side.audio_url}"></audio>
        ${texts}
        ${translation}
      </div>`;
}

function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;");
}

function paint(): void {
    if (!session) {
        return;
    }
    el("progress-label").textContent = `${session.completed}/${session.total}`;
    show("queue-loading", session.phase === "loading" || session.phase === "submitting");
    show("pair-card", session.phase === "rating");
    show("done-screen", session.phase === "done");
    show("fetch-banner", session.phase === "failed");
    show("submit-banner", session.submitError !== null);

    if (session.fetchError) {
        el("fetch-banner-message").textContent = session.fetchError;
    }
    if (session.submitError) {
        el("submit-banner-message").textContent =
            `rating for ${session.submitError.pair_id} did not reach the server ` +
            `(${session.submitError.message}); it is back on screen`;
    }
    if (session.phase === "rating" && session.pair) {
        const pair = session.pair;
        el("pair-title").textContent = `${pair.pair_id} · ${pair.label} · ${pair.kind}`;
        el("pair-sides").innerHTML =
            sideHtml("left", pair.left) + sideHtml("right", pair.right);
    }
}

async function rate(score: Score): Promise<void> {
    if (!session) {
        return;
    }
    await session.rate(score);
    paint();
}

async function startSession(): Promise<void> {
    const annotator = (el<HTMLInputElement>("annotator-input").value || "").trim();
    if (!annotator) {
        return;
    }
    localStorage.setItem("annotator", annotator);
    session = new ReviewSession(api, annotator);
    show("login-screen", false);
    show("rating-screen", true);
    el("annotator-label").textContent = annotator;
    await session.start();
    paint();
}

async function paintReport(): Promise<void> {
    const container = el("report-body");
    let report;
    try {
        report = await api.fetchReport();
    } catch (err) {
        container.textContent = err instanceof Error ? err.message : String(err);
        return;
    }
    if (report === null) {
        container.textContent = "No ratings recorded yet.";
        return;
    }
    let section = "";
    const parts: string[] = [];
    for (const row of reportRows(report)) {
        if (row.section !== section) {
            section = row.section;
            parts.push(`<tr class="section"><td colspan="2">${escapeHtml(section)}</td></tr>`);
        }
        parts.push(
            `<tr><td>${escapeHtml(row.name)}</td><td>${escapeHtml(row.value)}</td></tr>`,
        );
    }
    container.innerHTML = `<table>${parts.join("")}</table>`;
}

function route(): void {
    const showReport = location.hash === "#report";
    show("report-screen", showReport);
    show("main-screen", !showReport);
    if (showReport) {
        void paintReport();
    }
}

export function boot(): void {
    el("start-button").addEventListener("click", () => void startSession());
    el<HTMLInputElement>("annotator-input").value =
        localStorage.getItem("annotator") ?? "";
    el("annotator-input").addEventListener("keydown", (event) => {
        if ((event as KeyboardEvent).key === "Enter") {
            void startSession();
        }
    });

    for (const button of document.querySelectorAll<HTMLButtonElement>("[data-score]")) {
        button.addEventListener("click", () => {
            void rate(Number(button.dataset.score) as Score);
        });
    }
    el("fetch-retry").addEventListener("click", () => {
        void session?.retry().then(paint);
    });

    document.addEventListener("keydown", (event) => {
        const target = event.target as HTMLElement;
        if (target.tagName === "INPUT" || target.tagName === "TEXTAREA") {
            return;
        }
        const score = scoreForKey(event.key);
        if (score !== null && session?.phase === "rating") {
            event.preventDefault();
            void rate(score);
        }
    });

    window.addEventListener("hashchange", route);
    route();
}

boot();
