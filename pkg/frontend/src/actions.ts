// Action menu: one Action message per selected entity, tier-gated
// buttons, mandatory comment for the comment verb, inline results.

import { actionMessage } from "./protocol.js";
import { ConsoleSession } from "./state.js";

export const ALL_VERBS = [
    "reboot",
    "reimage",
    "remove_from_scheduler",
    "return_to_service",
    "comment",
];

export type SendFn = (msg: object) => void;

export class ActionMenu {
    private seq = 0;

    constructor(
        private root: HTMLElement,
        private session: ConsoleSession,
        private send: SendFn,
    ) {}

    // Sends one action per selected entity; returns the request ids.
    issue(verb: string, comment: string): string[] {
        if (!this.session.allowedVerbs.includes(verb)) {
            return [];
        }
        if (verb === "comment" && comment.trim() === "") {
            return [];
        }
        const ids: string[] = [];
        for (const target of [...this.session.selection].sort()) {
            const id = `act-${++this.seq}`;
            this.send(actionMessage(id, verb, target, comment));
            ids.push(id);
        }
        return ids;
    }

    render(): void {
        this.root.textContent = "";
        const title = document.createElement("div");
        title.className = "panel-title";
        title.textContent = `actions (${this.session.tier || "not signed in"})`;
        this.root.appendChild(title);

        const commentBox = document.createElement("input");
        commentBox.className = "comment-input";
        commentBox.placeholder = "comment (required for comment verb)";

        const buttons = document.createElement("div");
        buttons.className = "action-buttons";
        for (const verb of ALL_VERBS) {
            const button = document.createElement("button");
            button.className = `action action-${verb}`;
            button.textContent = verb.replace(/_/g, " ");
            const allowed = this.session.allowedVerbs.includes(verb);
            button.disabled = !allowed || this.session.selection.size === 0;
            if (!allowed) button.title = "not permitted at your tier";
            button.addEventListener("click", () => this.issue(verb, commentBox.value));
            buttons.appendChild(button);
        }
        this.root.appendChild(buttons);
        this.root.appendChild(commentBox);

        const results = document.createElement("div");
        results.className = "action-results";
        for (const result of this.session.actionResults.slice(-8)) {
            const row = document.createElement("div");
            row.className = `action-result outcome-${result.outcome}`;
            row.textContent = `${result.action_id}: ${result.outcome}${
                result.reason ? ` — ${result.reason}` : ""
            } (audit ${result.audit_id})`;
            results.appendChild(row);
        }
        this.root.appendChild(results);
    }
}
