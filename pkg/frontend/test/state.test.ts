// The authoritative-model invariant: server messages are the only thing
// that changes what the console believes about the world.

import { describe, expect, it } from "vitest";

import { ActionMenu } from "../src/actions.js";
import { renderFrame } from "../src/render.js";
import { ConsoleSession } from "../src/state.js";
import { authMessage, loadFixtureFrame, sessionWithFrame } from "./helpers.js";

describe("server-driven state", () => {
    it("auth result sets tier and verbs", () => {
        const session = new ConsoleSession();
        session.applyServerMessage(authMessage("operator", ["reboot", "comment"]));
        expect(session.tier).toBe("operator");
        expect(session.allowedVerbs).toEqual(["reboot", "comment"]);
    });

    it("live frames replace, replay frames accumulate", () => {
        const frame = loadFixtureFrame("frame_idle");
        const session = sessionWithFrame(frame);
        expect(session.viewFrame?.frame_id).toBe(frame.frame_id);

        session.applyServerMessage({ type: "frame", v: 1, replay: true, frame });
        session.applyServerMessage({ type: "frame", v: 1, replay: true, frame });
        session.applyServerMessage({ type: "replay_done", v: 1, count: 2 });
        expect(session.replayMode).toBe(true);
        expect(session.replayFrames.length).toBe(2);
        session.scrubTo(1);
        expect(session.replayIndex).toBe(1);
        session.exitReplay();
        expect(session.viewFrame?.frame_id).toBe(frame.frame_id);
    });

    it("alert events and action results append", () => {
        const session = new ConsoleSession();
        session.applyServerMessage({
            type: "alert_event",
            v: 1,
            event: "raised",
            alert: {
                point_id: "status.fire_alarm", kind: "BINARY", observed: 1, limit: 0,
                severity: "critical", cue_class: "Fire", timestamp: 5, zone: "pod",
            },
        });
        session.applyServerMessage({
            type: "action_result", v: 1, action_id: "a1",
            outcome: "denied", reason: "tier viewer may not reboot", audit_id: 1,
        });
        expect(session.alertLog.length).toBe(1);
        expect(session.actionResults[0].outcome).toBe("denied");
    });
});

describe("nothing else mutates the model", () => {
    it("rendering does not change the session", () => {
        const session = sessionWithFrame(loadFixtureFrame("frame_water"));
        const before = JSON.stringify(session.viewFrame);
        document.body.innerHTML = "<div id='r'></div>";
        renderFrame(document.getElementById("r")!, session);
        renderFrame(document.getElementById("r")!, session);
        expect(JSON.stringify(session.viewFrame)).toBe(before);
        expect(session.actionResults).toEqual([]);
    });

    it("issuing actions leaves the frame and results untouched until replies arrive", () => {
        const session = sessionWithFrame(loadFixtureFrame("frame_idle"));
        session.applyServerMessage(authMessage("admin", ["reboot", "comment", "reimage",
            "remove_from_scheduler", "return_to_service"]));
        session.selectMany([session.viewFrame!.entities[0].id]);
        const sent: object[] = [];
        document.body.innerHTML = "<div id='a'></div>";
        const menu = new ActionMenu(document.getElementById("a")!, session, (m) => sent.push(m));
        const before = JSON.stringify(session.viewFrame);
        menu.issue("reboot", "");
        expect(sent.length).toBe(1);
        expect(session.actionResults).toEqual([]);  // no reply yet -> no model change
        expect(JSON.stringify(session.viewFrame)).toBe(before);
    });

    it("selection is local ui state and never edits frames", () => {
        const session = sessionWithFrame(loadFixtureFrame("frame_idle"));
        const before = JSON.stringify(session.viewFrame);
        session.toggleSelect("node-0001");
        session.toggleSelect("node-0002");
        session.clearSelection();
        expect(JSON.stringify(session.viewFrame)).toBe(before);
    });
});
