// Bootstrap: endpoint and token come from URL params, e.g.
//   index.html?endpoint=ws://127.0.0.1:8787/ws&token=admin-token

import { ActionMenu } from "./actions.js";
import { ConsoleConnection } from "./connection.js";
import { PullPanel } from "./pull.js";
import { renderFrame } from "./render.js";
import { ReplayBar } from "./replay.js";
import { ConsoleSession } from "./state.js";

function bootstrap(): void {
    const params = new URLSearchParams(window.location.search);
    const endpoint = params.get("endpoint") ?? "ws://127.0.0.1:8787/ws";
    const token = params.get("token") ?? "viewer-token";

    const session = new ConsoleSession();
    const connection = new ConsoleConnection(endpoint, token, session);

    const frameRoot = document.getElementById("frame")!;
    const actionsRoot = document.getElementById("actions")!;
    const pullRoot = document.getElementById("pull")!;
    const replayRoot = document.getElementById("replay")!;
    const statusRoot = document.getElementById("status")!;

    const menu = new ActionMenu(actionsRoot, session, (m) => connection.send(m));
    const pull = new PullPanel(pullRoot, session, (m) => connection.send(m));
    const replay = new ReplayBar(replayRoot, session, (m) => connection.send(m));

    session.onChange(() => {
        statusRoot.textContent = session.connected
            ? `connected as ${session.principal} (${session.tier})`
            : "disconnected — retrying";
        if (session.authOk === false) {
            statusRoot.textContent = `auth failed: ${session.authReason}`;
        }
        renderFrame(frameRoot, session);
        menu.render();
        pull.render();
        replay.render();
    });
    connection.connect();
}

bootstrap();
