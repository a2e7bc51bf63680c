/** WebSocket request/response client with pushed-event delivery.
 *
 * The transport is injected so tests can replay recorded exchanges through
 * a fake socket; the client itself never interprets state, it only matches
 * response ids and forwards event frames in arrival order.
 */

import {
  EventFrame,
  RequestFrame,
  ResponseFrame,
  isEvent,
  isResponse,
} from "./protocol.js";

export interface SocketLike {
  send(text: string): void;
  close?(): void;
}

interface Pending {
  resolve: (result: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class ProtocolError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export class SessionClient {
  private socket: SocketLike;
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private eventListeners: ((event: EventFrame) => void)[] = [];
  /** every frame sent, for protocol-conformance assertions */
  readonly sentFrames: RequestFrame[] = [];

  constructor(socket: SocketLike) {
    this.socket = socket;
  }

  /** Feed one raw text frame from the transport. */
  receive(text: string): void {
    const frame = JSON.parse(text) as unknown;
    if (isEvent(frame)) {
      for (const listener of this.eventListeners) {
        listener(frame as EventFrame);
      }
      return;
    }
    if (isResponse(frame)) {
      const response = frame as ResponseFrame;
      if (response.id === null || response.id === undefined) {
        return;
      }
      const waiting = this.pending.get(response.id as number);
      if (!waiting) {
        return;
      }
      this.pending.delete(response.id as number);
      if (response.error) {
        waiting.reject(new ProtocolError(response.error.code, response.error.message));
      } else {
        waiting.resolve(response.result ?? {});
      }
    }
  }

  onEvent(listener: (event: EventFrame) => void): void {
    this.eventListeners.push(listener);
  }

  request(
    method: string,
    params: Record<string, unknown> = {},
  ): Promise<Record<string, unknown>> {
    const frame: RequestFrame = { id: this.nextId++, method, params };
    this.sentFrames.push(frame);
    return new Promise((resolve, reject) => {
      this.pending.set(frame.id, { resolve, reject });
      this.socket.send(JSON.stringify(frame));
    });
  }
}
