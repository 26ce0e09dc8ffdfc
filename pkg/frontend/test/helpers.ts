import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ServerMessage, VizFrame } from "../src/protocol.js";
import { ConsoleSession } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixtureFrame(name: string): VizFrame {
    const raw = readFileSync(join(here, "fixtures", `${name}.json`), "utf-8");
    return JSON.parse(raw) as VizFrame;
}

export function sessionWithFrame(frame: VizFrame): ConsoleSession {
    const session = new ConsoleSession();
    session.applyServerMessage({
        type: "frame",
        v: 1,
        replay: false,
        frame,
    } as ServerMessage);
    return session;
}

export function authMessage(tier: string, verbs: string[]): ServerMessage {
    return {
        type: "auth_result",
        v: 1,
        ok: true,
        principal: tier,
        tier,
        allowed_verbs: verbs,
    } as ServerMessage;
}
