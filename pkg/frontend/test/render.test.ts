// DOM snapshots of the golden scenario frames plus targeted assertions
// on the visual-cue language.

import { beforeEach, describe, expect, it } from "vitest";

import { renderFrame } from "../src/render.js";
import { loadFixtureFrame, sessionWithFrame } from "./helpers.js";

let root: HTMLElement;

beforeEach(() => {
    document.body.innerHTML = "<div id='frame'></div>";
    root = document.getElementById("frame")!;
});

describe("golden frame snapshots", () => {
    for (const name of ["idle", "cooling", "water", "fire"]) {
        it(`renders the ${name} frame`, () => {
            const session = sessionWithFrame(loadFixtureFrame(`frame_${name}`));
            renderFrame(root, session);
            expect(root.innerHTML).toMatchSnapshot();
        });
    }
});

it("idle frame is a uniform colorless grid", () => {
    const session = sessionWithFrame(loadFixtureFrame("frame_idle"));
    renderFrame(root, session);
    const nodes = root.querySelectorAll(".node");
    expect(nodes.length).toBe(24);
    expect(root.querySelectorAll(".node.color-colorless").length).toBe(24);
    expect(root.querySelectorAll(".node.color-red").length).toBe(0);
});

it("cooling frame shows the snowflake cue", () => {
    const session = sessionWithFrame(loadFixtureFrame("frame_cooling"));
    renderFrame(root, session);
    const snowflake = root.querySelector(".cue-MechanicalCooling");
    expect(snowflake).not.toBeNull();
    expect(snowflake!.textContent).toBe("❄");
});

it("water frame shows the water cue and critical alert", () => {
    const session = sessionWithFrame(loadFixtureFrame("frame_water"));
    renderFrame(root, session);
    expect(root.querySelector(".cue-Water")).not.toBeNull();
    const critical = [...root.querySelectorAll(".alert.severity-critical")];
    expect(critical.some((el) => el.textContent!.includes("status.water_alarm"))).toBe(true);
});

it("fire frame shows the flame cue", () => {
    const session = sessionWithFrame(loadFixtureFrame("frame_fire"));
    renderFrame(root, session);
    expect(root.querySelector(".cue-Fire")).not.toBeNull();
    expect(root.querySelector(".cue-Fire")!.textContent).toBe("🔥");
});

it("every visible cue icon corresponds to a pod cue or alert in the frame", () => {
    for (const name of ["idle", "cooling", "water", "fire"]) {
        const frame = loadFixtureFrame(`frame_${name}`);
        const session = sessionWithFrame(frame);
        renderFrame(root, session);
        const allowed = new Set<string>();
        for (const cue of frame.pod_cues) if (cue.active) allowed.add(cue.cue);
        for (const alert of frame.active_alerts) allowed.add(alert.cue_class);
        for (const icon of root.querySelectorAll(".cue-bar .cue")) {
            expect(allowed.has(icon.getAttribute("data-cue")!)).toBe(true);
        }
    }
});

it("node bar height tracks the height scale", () => {
    const frame = loadFixtureFrame("frame_water");
    const busy = frame.entities.find((e) => e.height > 0)!;
    const session = sessionWithFrame(frame);
    renderFrame(root, session);
    const cell = root.querySelector(`[data-entity="${busy.id}"] .load-bar`) as HTMLElement;
    expect(cell.style.height).toBe(`${Math.round(Math.min(2, busy.height) * 50)}%`);
});

it("schema version mismatch renders a banner instead of the grid", () => {
    const frame = loadFixtureFrame("frame_idle");
    const session = sessionWithFrame({ ...frame, v: 99 });
    renderFrame(root, session);
    expect(root.querySelector(".banner-error")).not.toBeNull();
    expect(root.querySelectorAll(".node").length).toBe(0);
});

it("selection and pull highlights are rendered", () => {
    const frame = loadFixtureFrame("frame_idle");
    const session = sessionWithFrame(frame);
    const first = frame.entities[0].id;
    const second = frame.entities[1].id;
    session.toggleSelect(first);
    session.applyServerMessage({
        type: "pull_result",
        v: 1,
        entities: [second],
        co_scheduled: [],
    });
    renderFrame(root, session);
    expect(root.querySelector(`[data-entity="${first}"]`)!.className).toContain("selected");
    expect(root.querySelector(`[data-entity="${second}"]`)!.className).toContain("pull-hit");
});

it("clicking a node toggles selection through session state", () => {
    const frame = loadFixtureFrame("frame_idle");
    const session = sessionWithFrame(frame);
    renderFrame(root, session);
    const id = frame.entities[3].id;
    (root.querySelector(`[data-entity="${id}"]`) as HTMLElement).click();
    expect(session.selection.has(id)).toBe(true);
});
