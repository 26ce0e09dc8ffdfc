// Replay controls: request a window, scrub through the returned frames
// with the same renderer the live view uses.

import { replayMessage } from "./protocol.js";
import { ConsoleSession } from "./state.js";
import { SendFn } from "./actions.js";

export class ReplayBar {
    private seq = 0;

    constructor(
        private root: HTMLElement,
        private session: ConsoleSession,
        private send: SendFn,
    ) {}

    request(at: number, before: number, after: number): string {
        const id = `replay-${++this.seq}`;
        this.session.exitReplay();
        this.send(replayMessage(id, at, before, after));
        return id;
    }

    render(): void {
        this.root.textContent = "";
        const title = document.createElement("div");
        title.className = "panel-title";
        title.textContent = "replay";
        this.root.appendChild(title);

        const at = document.createElement("input");
        at.className = "replay-at";
        at.placeholder = "event time (UTC s)";
        const span = document.createElement("input");
        span.className = "replay-span";
        span.placeholder = "± seconds";
        span.value = "300";
        const go = document.createElement("button");
        go.className = "replay-go";
        go.textContent = "load";
        go.addEventListener("click", () => {
            const t = parseInt(at.value, 10);
            const s = parseInt(span.value, 10) || 0;
            if (!Number.isNaN(t)) this.request(t, s, s);
        });
        this.root.append(at, span, go);

        if (this.session.replayMode && this.session.replayFrames.length > 0) {
            const scrub = document.createElement("input");
            scrub.type = "range";
            scrub.className = "replay-scrub";
            scrub.min = "0";
            scrub.max = String(this.session.replayFrames.length - 1);
            scrub.value = String(this.session.replayIndex);
            scrub.addEventListener("input", () =>
                this.session.scrubTo(parseInt(scrub.value, 10)),
            );
            const exit = document.createElement("button");
            exit.className = "replay-exit";
            exit.textContent = "back to live";
            exit.addEventListener("click", () => this.session.exitReplay());
            const label = document.createElement("span");
            label.className = "replay-pos";
            label.textContent = `${this.session.replayIndex + 1} / ${this.session.replayFrames.length}`;
            this.root.append(scrub, label, exit);
        }
    }
}
