// Console model. Authoritative invariant: everything the console renders
// about the world (tier, frames, alerts, action/pull results) changes only
// inside applyServerMessage. Selection and replay scrubbing are local UI
// state and never touch the server-fed model.

import {
    ActionResultMsg,
    AlertEventMsg,
    CoScheduledJob,
    FRAME_SCHEMA_VERSION,
    ServerMessage,
    VizFrame,
} from "./protocol.js";

export type Listener = () => void;

export class ConsoleSession {
    connected = false;
    authOk: boolean | null = null;
    principal = "";
    tier = "";
    allowedVerbs: string[] = [];
    authReason = "";

    latestFrame: VizFrame | null = null;
    schemaMismatch = false;
    alertLog: AlertEventMsg[] = [];
    actionResults: ActionResultMsg[] = [];
    pullEntities: string[] | null = null;
    coScheduled: CoScheduledJob[] = [];
    lastError = "";

    replayFrames: VizFrame[] = [];
    replayLoading = false;
    replayMode = false;
    replayIndex = 0;

    selection = new Set<string>();

    private listeners: Listener[] = [];

    onChange(listener: Listener): void {
        this.listeners.push(listener);
    }

    private emit(): void {
        for (const listener of this.listeners) listener();
    }

    // -- the single server-driven mutation path ------------------------

    applyServerMessage(msg: ServerMessage): void {
        switch (msg.type) {
            case "auth_result":
                this.authOk = msg.ok;
                this.principal = msg.principal ?? "";
                this.tier = msg.tier ?? "";
                this.allowedVerbs = msg.allowed_verbs ?? [];
                this.authReason = msg.reason ?? "";
                break;
            case "frame":
                if (msg.frame.v !== FRAME_SCHEMA_VERSION) {
                    this.schemaMismatch = true;
                    break;
                }
                if (msg.replay) {
                    this.replayFrames.push(msg.frame);
                    this.replayMode = true;
                    this.replayLoading = true;
                } else {
                    this.latestFrame = msg.frame;
                }
                break;
            case "alert_event":
                this.alertLog.push(msg);
                if (this.alertLog.length > 200) this.alertLog.shift();
                break;
            case "action_result":
                this.actionResults.push(msg);
                break;
            case "pull_result":
                this.pullEntities = msg.entities;
                this.coScheduled = msg.co_scheduled;
                break;
            case "replay_done":
                this.replayLoading = false;
                this.replayIndex = 0;
                break;
            case "error":
                this.lastError = `${msg.code}: ${msg.message}`;
                break;
        }
        this.emit();
    }

    // -- local UI state --------------------------------------------------

    toggleSelect(entityId: string): void {
        if (this.selection.has(entityId)) this.selection.delete(entityId);
        else this.selection.add(entityId);
        this.emit();
    }

    selectMany(entityIds: string[]): void {
        for (const id of entityIds) this.selection.add(id);
        this.emit();
    }

    clearSelection(): void {
        this.selection.clear();
        this.emit();
    }

    scrubTo(index: number): void {
        if (this.replayFrames.length === 0) return;
        this.replayIndex = Math.max(0, Math.min(this.replayFrames.length - 1, index));
        this.emit();
    }

    exitReplay(): void {
        this.replayMode = false;
        this.replayFrames = [];
        this.replayIndex = 0;
        this.emit();
    }

    // frame the renderer should show right now
    get viewFrame(): VizFrame | null {
        if (this.replayMode && this.replayFrames.length > 0) {
            return this.replayFrames[this.replayIndex];
        }
        return this.latestFrame;
    }
}
