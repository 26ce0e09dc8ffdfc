// Server connection: hello on open, exponential reconnect backoff, all
// inbound messages routed through the session's single mutation path.

import { helloMessage, ServerMessage } from "./protocol.js";
import { ConsoleSession } from "./state.js";

type WebSocketLike = {
    send(data: string): void;
    close(): void;
    onopen: ((ev?: unknown) => void) | null;
    onclose: ((ev?: unknown) => void) | null;
    onerror: ((ev?: unknown) => void) | null;
    onmessage: ((ev: { data: unknown }) => void) | null;
    readyState: number;
};

export type SocketFactory = (url: string) => WebSocketLike;

const OPEN = 1;

export class ConsoleConnection {
    private ws: WebSocketLike | null = null;
    private attempts = 0;
    private closed = false;

    constructor(
        private url: string,
        private token: string,
        private session: ConsoleSession,
        private factory: SocketFactory = (u) => new WebSocket(u) as unknown as WebSocketLike,
    ) {}

    connect(): void {
        this.ws = this.factory(this.url);
        this.ws.onopen = () => {
            this.attempts = 0;
            this.session.connected = true;
            this.ws!.send(JSON.stringify(helloMessage(this.token)));
        };
        this.ws.onmessage = (event) => {
            const message = JSON.parse(String(event.data)) as ServerMessage;
            this.session.applyServerMessage(message);
        };
        this.ws.onclose = () => {
            this.session.connected = false;
            if (!this.closed) this.reconnect();
        };
        this.ws.onerror = () => {
            // onclose follows; nothing else to do
        };
    }

    private reconnect(): void {
        const timeout = Math.min(1000 * 2 ** this.attempts, 30000);
        this.attempts += 1;
        setTimeout(() => {
            if (!this.closed) this.connect();
        }, timeout);
    }

    send(message: object): void {
        if (this.ws && this.ws.readyState === OPEN) {
            this.ws.send(JSON.stringify(message));
        }
    }

    close(): void {
        this.closed = true;
        this.ws?.close();
    }
}
