// DOM renderer: rack/slot grid with color + height per node, pod cue
// icons, alert list, stats. Pure view of the session model; rendering
// never mutates state.

import { AlertInfo, CueClass, PodCue, VizFrame } from "./protocol.js";
import { ConsoleSession } from "./state.js";

// deliberately common glyphs: snowflake for mechanical cooling, airflow
// for economizer, water drop, lightning bolt for power, flame for fire
const CUE_ICONS: Record<CueClass, string> = {
    MechanicalCooling: "❄",
    Economizer: "🌬",
    Water: "💧",
    Power: "⚡",
    Temperature: "🌡",
    Fire: "🔥",
    NodeHealth: "⚠",
};

function el(tag: string, className: string, text = ""): HTMLElement {
    const node = document.createElement(tag);
    node.className = className;
    if (text) node.textContent = text;
    return node;
}

function renderCues(cues: PodCue[]): HTMLElement {
    const bar = el("div", "cue-bar");
    for (const cue of cues) {
        if (!cue.active) continue;
        const icon = el("span", `cue cue-${cue.cue}`, CUE_ICONS[cue.cue]);
        icon.title = `${cue.cue} (${cue.zone})`;
        icon.setAttribute("data-cue", cue.cue);
        icon.setAttribute("data-zone", cue.zone);
        bar.appendChild(icon);
    }
    return bar;
}

function renderStats(frame: VizFrame): HTMLElement {
    const s = frame.stats;
    const box = el("div", "stats");
    box.appendChild(el("span", "stat", `frame ${frame.frame_id}`));
    box.appendChild(el("span", "stat", `nodes ${s.nodes_total}`));
    box.appendChild(el("span", "stat stat-red", `red ${s.nodes_red}`));
    box.appendChild(el("span", "stat", `jobs ${s.jobs_running}`));
    box.appendChild(el("span", "stat", `${s.total_kw.toFixed(1)} kW`));
    box.appendChild(el("span", "stat", `PUE ${s.pue_ratio.toFixed(2)}`));
    return box;
}

function renderAlerts(alerts: AlertInfo[]): HTMLElement {
    const list = el("div", "alerts");
    for (const alert of alerts) {
        const row = el(
            "div",
            `alert severity-${alert.severity}`,
            `${CUE_ICONS[alert.cue_class]} ${alert.point_id} ${alert.kind} ` +
                `observed ${alert.observed} limit ${alert.limit} [${alert.zone}]`,
        );
        row.setAttribute("data-cue", alert.cue_class);
        list.appendChild(row);
    }
    return list;
}

function renderGrid(frame: VizFrame, session: ConsoleSession): HTMLElement {
    const grid = el("div", "rack-grid");
    const racks = new Map<string, typeof frame.entities>();
    for (const entity of frame.entities) {
        const rack = racks.get(entity.rack) ?? [];
        rack.push(entity);
        racks.set(entity.rack, rack);
    }
    const highlighted = new Set(session.pullEntities ?? []);
    for (const rack of [...racks.keys()].sort()) {
        const column = el("div", "rack");
        column.appendChild(el("div", "rack-label", rack));
        const slots = racks.get(rack)!.sort((a, b) => a.slot - b.slot);
        for (const entity of slots) {
            const classes = ["node", `color-${entity.color}`];
            if (session.selection.has(entity.id)) classes.push("selected");
            if (highlighted.has(entity.id)) classes.push("pull-hit");
            const cell = el("div", classes.join(" "));
            cell.setAttribute("data-entity", entity.id);
            cell.title = `${entity.id}${entity.badges.length ? " — " + entity.badges.join(", ") : ""}`;
            const bar = el("div", "load-bar");
            // bar height tracks relative CPU load (heightScale 0..2)
            bar.style.height = `${Math.round(Math.min(2, Math.max(0, entity.height)) * 50)}%`;
            cell.appendChild(bar);
            if (entity.badges.length > 0) {
                cell.appendChild(el("span", "badge", "⚠"));
            }
            cell.addEventListener("click", () => session.toggleSelect(entity.id));
            column.appendChild(cell);
        }
        grid.appendChild(column);
    }
    return grid;
}

export function renderFrame(root: HTMLElement, session: ConsoleSession): void {
    root.textContent = "";
    if (session.schemaMismatch) {
        root.appendChild(
            el("div", "banner banner-error", "frame schema version not supported — update the console"),
        );
        return;
    }
    const frame = session.viewFrame;
    if (!frame) {
        root.appendChild(el("div", "banner", "waiting for first frame…"));
        return;
    }
    if (session.replayMode) {
        root.appendChild(
            el("div", "banner banner-replay", `replay: frame ${frame.frame_id} @ ${frame.timestamp}`),
        );
    }
    root.appendChild(renderStats(frame));
    root.appendChild(renderCues(frame.pod_cues));
    root.appendChild(renderGrid(frame, session));
    root.appendChild(renderAlerts(frame.active_alerts));
}
