// Pull panel: isolate nodes by user, job, load, or status; highlight the
// result set and list co-scheduled jobs so their owners can be notified.

import { PullKind, pullMessage } from "./protocol.js";
import { ConsoleSession } from "./state.js";
import { SendFn } from "./actions.js";

export class PullPanel {
    private seq = 0;

    constructor(
        private root: HTMLElement,
        private session: ConsoleSession,
        private send: SendFn,
    ) {}

    query(kind: PullKind, value: string): string {
        const id = `pull-${++this.seq}`;
        this.send(pullMessage(id, kind, value));
        return id;
    }

    render(): void {
        this.root.textContent = "";
        const title = document.createElement("div");
        title.className = "panel-title";
        title.textContent = "pull";
        this.root.appendChild(title);

        const kind = document.createElement("select");
        kind.className = "pull-kind";
        for (const option of ["user", "job", "load_above", "status"]) {
            const item = document.createElement("option");
            item.value = option;
            item.textContent = option;
            kind.appendChild(item);
        }
        const value = document.createElement("input");
        value.className = "pull-value";
        value.placeholder = "name / id / threshold / color";
        const go = document.createElement("button");
        go.className = "pull-go";
        go.textContent = "pull";
        go.addEventListener("click", () => this.query(kind.value as PullKind, value.value));
        this.root.append(kind, value, go);

        const results = document.createElement("div");
        results.className = "pull-results";
        if (this.session.pullEntities !== null) {
            if (this.session.pullEntities.length === 0) {
                const none = document.createElement("div");
                none.className = "pull-empty";
                none.textContent = "no matches";
                results.appendChild(none);
            } else {
                const summary = document.createElement("div");
                summary.className = "pull-summary";
                summary.textContent = `${this.session.pullEntities.length} nodes highlighted`;
                results.appendChild(summary);
                const select = document.createElement("button");
                select.className = "pull-select-all";
                select.textContent = "select all";
                select.addEventListener("click", () =>
                    this.session.selectMany(this.session.pullEntities ?? []),
                );
                results.appendChild(select);
                for (const co of this.session.coScheduled) {
                    const row = document.createElement("div");
                    row.className = "co-scheduled";
                    row.textContent = `also on these nodes: job ${co.job_id} (${co.user}) × ${co.hosts.length}`;
                    results.appendChild(row);
                }
            }
        }
        this.root.appendChild(results);
    }
}
