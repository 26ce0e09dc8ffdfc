// Tier gating and the one-message-per-selected-entity contract.

import { beforeEach, expect, it } from "vitest";

import { ActionMenu, ALL_VERBS } from "../src/actions.js";
import { PullPanel } from "../src/pull.js";
import { ConsoleSession } from "../src/state.js";
import { authMessage, loadFixtureFrame, sessionWithFrame } from "./helpers.js";

let sent: any[];
let session: ConsoleSession;
let menuRoot: HTMLElement;

beforeEach(() => {
    document.body.innerHTML = "<div id='m'></div><div id='p'></div>";
    menuRoot = document.getElementById("m")!;
    sent = [];
    session = sessionWithFrame(loadFixtureFrame("frame_idle"));
});

function menu(): ActionMenu {
    return new ActionMenu(menuRoot, session, (m) => sent.push(m));
}

it("viewer tier renders every action button disabled", () => {
    session.applyServerMessage(authMessage("viewer", []));
    session.selectMany(["node-0001"]);
    menu().render();
    const buttons = [...menuRoot.querySelectorAll("button.action")] as HTMLButtonElement[];
    expect(buttons.length).toBe(ALL_VERBS.length);
    expect(buttons.every((b) => b.disabled)).toBe(true);
});

it("operator tier enables everything except reimage", () => {
    session.applyServerMessage(
        authMessage("operator", ["reboot", "remove_from_scheduler", "return_to_service", "comment"]),
    );
    session.selectMany(["node-0001"]);
    menu().render();
    const reimage = menuRoot.querySelector(".action-reimage") as HTMLButtonElement;
    const reboot = menuRoot.querySelector(".action-reboot") as HTMLButtonElement;
    expect(reimage.disabled).toBe(true);
    expect(reboot.disabled).toBe(false);
});

it("issue sends one action message per selected entity", () => {
    session.applyServerMessage(authMessage("admin", [...ALL_VERBS]));
    const targets = Array.from({ length: 128 }, (_, i) => `node-${String(i + 1).padStart(4, "0")}`);
    session.selectMany(targets);
    const ids = menu().issue("reboot", "");
    expect(ids.length).toBe(128);
    expect(sent.length).toBe(128);
    expect(new Set(sent.map((m) => m.target)).size).toBe(128);
    expect(sent.every((m) => m.type === "action" && m.verb === "reboot")).toBe(true);
});

it("comment verb requires a comment", () => {
    session.applyServerMessage(authMessage("admin", [...ALL_VERBS]));
    session.selectMany(["node-0001"]);
    expect(menu().issue("comment", "   ")).toEqual([]);
    expect(sent.length).toBe(0);
    expect(menu().issue("comment", "leak acknowledged").length).toBe(1);
    expect(sent[0].comment).toBe("leak acknowledged");
});

it("denied results render inline", () => {
    session.applyServerMessage(authMessage("viewer", []));
    session.applyServerMessage({
        type: "action_result", v: 1, action_id: "a9",
        outcome: "denied", reason: "tier viewer may not reboot", audit_id: 9,
    });
    menu().render();
    const row = menuRoot.querySelector(".action-result.outcome-denied")!;
    expect(row.textContent).toContain("denied");
    expect(row.textContent).toContain("tier viewer may not reboot");
});

it("pull panel lists co-scheduled jobs and empty results say no matches", () => {
    const pullRoot = document.getElementById("p")!;
    const panel = new PullPanel(pullRoot, session, (m) => sent.push(m));
    panel.query("user", "alice");
    expect(sent[0].selector).toEqual({ kind: "user", value: "alice" });

    session.applyServerMessage({
        type: "pull_result", v: 1, entities: ["node-0001", "node-0002"],
        co_scheduled: [{ job_id: "j2", user: "bob", hosts: ["node-0001"] }],
    });
    panel.render();
    expect(pullRoot.querySelector(".pull-summary")!.textContent).toContain("2 nodes");
    expect(pullRoot.querySelector(".co-scheduled")!.textContent).toContain("j2");

    session.applyServerMessage({ type: "pull_result", v: 1, entities: [], co_scheduled: [] });
    panel.render();
    expect(pullRoot.querySelector(".pull-empty")!.textContent).toBe("no matches");
});
