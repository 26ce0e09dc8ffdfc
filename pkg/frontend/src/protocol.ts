// Wire types mirroring the server's JSON protocol (docs/protocol.md).

export const PROTOCOL_VERSION = 1;
export const FRAME_SCHEMA_VERSION = 1;

export type CueClass =
    | "MechanicalCooling"
    | "Economizer"
    | "Water"
    | "Power"
    | "Temperature"
    | "Fire"
    | "NodeHealth";

export type NodeColor = "colorless" | "blue" | "green" | "red";

export interface PodCue {
    zone: string;
    cue: CueClass;
    active: boolean;
}

export interface Entity {
    id: string;
    rack: string;
    slot: number;
    color: NodeColor;
    height: number;
    badges: string[];
}

export interface AlertInfo {
    point_id: string;
    kind: string;
    observed: number;
    limit: number;
    severity: string;
    cue_class: CueClass;
    timestamp: number;
    zone: string;
}

export interface FrameStats {
    nodes_total: number;
    nodes_red: number;
    jobs_running: number;
    total_kw: number;
    pue_ratio: number;
}

export interface VizFrame {
    v: number;
    frame_id: number;
    timestamp: number;
    pod_cues: PodCue[];
    entities: Entity[];
    active_alerts: AlertInfo[];
    stats: FrameStats;
}

export interface AuthResultMsg {
    type: "auth_result";
    v: number;
    ok: boolean;
    principal?: string;
    tier?: string;
    allowed_verbs?: string[];
    reason?: string;
}

export interface FrameMsg {
    type: "frame";
    v: number;
    replay: boolean;
    id?: string;
    frame: VizFrame;
}

export interface AlertEventMsg {
    type: "alert_event";
    v: number;
    event: "raised" | "cleared";
    alert: AlertInfo;
}

export interface ActionResultMsg {
    type: "action_result";
    v: number;
    id?: string;
    action_id: string;
    outcome: "executed" | "denied" | "failed";
    reason: string;
    audit_id: number;
}

export interface CoScheduledJob {
    job_id: string;
    user: string;
    hosts: string[];
}

export interface PullResultMsg {
    type: "pull_result";
    v: number;
    id?: string;
    entities: string[];
    co_scheduled: CoScheduledJob[];
}

export interface ReplayDoneMsg {
    type: "replay_done";
    v: number;
    id?: string;
    count: number;
}

export interface ErrorMsg {
    type: "error";
    v: number;
    id?: string;
    code: string;
    message: string;
}

export type ServerMessage =
    | AuthResultMsg
    | FrameMsg
    | AlertEventMsg
    | ActionResultMsg
    | PullResultMsg
    | ReplayDoneMsg
    | ErrorMsg;

export type PullKind = "user" | "job" | "load_above" | "status";

export function helloMessage(token: string) {
    return { type: "hello", v: PROTOCOL_VERSION, token };
}

export function actionMessage(id: string, verb: string, target: string, comment: string) {
    return { type: "action", v: PROTOCOL_VERSION, id, verb, target, comment };
}

export function pullMessage(id: string, kind: PullKind, value: string) {
    return { type: "pull", v: PROTOCOL_VERSION, id, selector: { kind, value } };
}

export function replayMessage(id: string, at: number, before: number, after: number) {
    return { type: "replay", v: PROTOCOL_VERSION, id, at, before, after };
}
