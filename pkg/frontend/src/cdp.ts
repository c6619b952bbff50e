/**
 * Minimal DevTools-protocol client: JSON-RPC over a page-level
 * websocket, plus the HTTP endpoints used to open and close tabs.
 */

import * as http from "node:http";
import WebSocket from "ws";

export class CdpError extends Error {}

interface Pending {
  resolve: (result: unknown) => void;
  reject: (err: Error) => void;
}

export interface TargetInfo {
  id: string;
  webSocketDebuggerUrl: string;
}

/** `PUT /json/new` — open a tab, returning its debugger endpoint. */
export function createTarget(browserHttpUrl: string): Promise<TargetInfo> {
  const endpoint = new URL("/json/new?about:blank", browserHttpUrl);
  return new Promise((resolve, reject) => {
    const req = http.request(endpoint, { method: "PUT" }, (res) => {
      let body = "";
      res.on("data", (chunk) => (body += chunk));
      res.on("end", () => {
        if (res.statusCode !== 200) {
          reject(new CdpError(`browser refused new target: HTTP ${res.statusCode}`));
          return;
        }
        try {
          const info = JSON.parse(body);
          if (!info.webSocketDebuggerUrl) {
            reject(new CdpError("target info lacks webSocketDebuggerUrl"));
            return;
          }
          resolve({ id: info.id, webSocketDebuggerUrl: info.webSocketDebuggerUrl });
        } catch (err) {
          reject(new CdpError(`bad target info: ${err}`));
        }
      });
    });
    req.on("error", (err) => reject(new CdpError(`cannot reach browser: ${err.message}`)));
    req.end();
  });
}

/** `GET /json/close/<id>` — best effort; errors are ignored. */
export function closeTarget(browserHttpUrl: string, targetId: string): Promise<void> {
  const endpoint = new URL(`/json/close/${targetId}`, browserHttpUrl);
  return new Promise((resolve) => {
    const req = http.request(endpoint, { method: "GET" }, (res) => {
      res.resume();
      res.on("end", () => resolve());
    });
    req.on("error", () => resolve());
    req.end();
  });
}

interface OnceWaiter {
  method: string;
  resolve: (params: any) => void;
  reject: (err: Error) => void;
  timer: NodeJS.Timeout;
}

export class CdpClient {
  private ws: WebSocket;
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private handlers = new Map<string, ((params: any) => void)[]>();
  private onceWaiters: OnceWaiter[] = [];
  private closed = false;
  public onDisconnect: ((reason: string) => void) | null = null;

  private constructor(ws: WebSocket) {
    this.ws = ws;
    ws.on("message", (data) => this.dispatch(String(data)));
    ws.on("close", () => this.fail("protocol connection closed"));
    ws.on("error", (err) => this.fail(`protocol error: ${err.message}`));
  }

  static connect(wsUrl: string): Promise<CdpClient> {
    return new Promise((resolve, reject) => {
      const ws = new WebSocket(wsUrl);
      ws.once("open", () => resolve(new CdpClient(ws)));
      ws.once("error", (err) => reject(new CdpError(`cannot connect: ${err.message}`)));
    });
  }

  private dispatch(raw: string): void {
    let msg: any;
    try {
      msg = JSON.parse(raw);
    } catch {
      return; // not ours to diagnose; the protocol never sends non-JSON
    }
    if (typeof msg.id === "number") {
      const pending = this.pending.get(msg.id);
      if (!pending) return;
      this.pending.delete(msg.id);
      if (msg.error) {
        pending.reject(new CdpError(msg.error.message ?? "command failed"));
      } else {
        pending.resolve(msg.result ?? {});
      }
    } else if (typeof msg.method === "string") {
      for (const handler of this.handlers.get(msg.method) ?? []) {
        handler(msg.params ?? {});
      }
      const ready = this.onceWaiters.filter((w) => w.method === msg.method);
      this.onceWaiters = this.onceWaiters.filter((w) => w.method !== msg.method);
      for (const waiter of ready) {
        clearTimeout(waiter.timer);
        waiter.resolve(msg.params ?? {});
      }
    }
  }

  private fail(reason: string): void {
    if (this.closed) return;
    this.closed = true;
    for (const pending of this.pending.values()) {
      pending.reject(new CdpError(reason));
    }
    this.pending.clear();
    for (const waiter of this.onceWaiters) {
      clearTimeout(waiter.timer);
      waiter.reject(new CdpError(reason));
    }
    this.onceWaiters = [];
    if (this.onDisconnect) this.onDisconnect(reason);
  }

  send(method: string, params: Record<string, unknown> = {}): Promise<unknown> {
    if (this.closed) {
      return Promise.reject(new CdpError("connection already closed"));
    }
    const id = this.nextId++;
    const promise = new Promise<unknown>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
    });
    this.ws.send(JSON.stringify({ id, method, params }));
    return promise;
  }

  on(method: string, handler: (params: any) => void): void {
    const list = this.handlers.get(method) ?? [];
    list.push(handler);
    this.handlers.set(method, list);
  }

  /** Wait for a single occurrence of an event; rejects on timeout or
   * disconnect. */
  once(method: string, timeoutMs: number): Promise<any> {
    return new Promise((resolve, reject) => {
      const waiter: OnceWaiter = {
        method,
        resolve,
        reject,
        timer: setTimeout(() => {
          this.onceWaiters = this.onceWaiters.filter((w) => w !== waiter);
          reject(new CdpError(`timed out waiting for ${method}`));
        }, timeoutMs),
      };
      this.onceWaiters.push(waiter);
    });
  }

  close(): void {
    this.closed = true;
    this.onDisconnect = null;
    this.ws.close();
  }
}
