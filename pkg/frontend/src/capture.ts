/**
 * One-shot page capture: open a tab, clear state, navigate, record
 * every `Network.requestWillBeSent`, and write the trace file after
 * the page has settled.
 */

import * as fs from "node:fs";
import { CdpClient, CdpError, closeTarget, createTarget } from "./cdp";
import {
  RequestRecord,
  StackFrame,
  mapCdpResourceType,
  serializeRecord,
} from "./trace";

export interface CaptureOptions {
  url: string;
  out: string;
  /** Extra wait after the load event before closing (default 10 s). */
  settleMs?: number;
  /** DevTools HTTP endpoint of a running browser. */
  browserHttpUrl?: string;
  /** Give up on the load event after this long. */
  loadTimeoutMs?: number;
}

export const DEFAULT_SETTLE_MS = 10_000;
export const DEFAULT_BROWSER = "http://127.0.0.1:9222";
const DEFAULT_LOAD_TIMEOUT_MS = 30_000;

interface CdpCallFrame {
  functionName?: string;
  url?: string;
  lineNumber?: number;
  columnNumber?: number;
}

interface CdpStackTrace {
  callFrames?: CdpCallFrame[];
  parent?: CdpStackTrace;
}

/**
 * Flatten an initiator stack: synchronous frames first (most recent
 * first, as the protocol delivers them), then each async parent
 * segment appended in ancestor order. Frames without a script URL
 * (native/internal) are dropped — they carry no attributable script.
 */
export function flattenStack(stack: CdpStackTrace | undefined): StackFrame[] {
  const frames: StackFrame[] = [];
  for (let seg = stack; seg !== undefined; seg = seg.parent) {
    for (const frame of seg.callFrames ?? []) {
      if (!frame.url) continue;
      frames.push({
        function_name: frame.functionName ?? "",
        script_url: frame.url,
        line: Math.max(0, frame.lineNumber ?? 0),
        column: Math.max(0, frame.columnNumber ?? 0),
      });
    }
  }
  return frames;
}

export interface CdpRequestWillBeSent {
  requestId: string;
  documentURL?: string;
  request: { url: string };
  wallTime?: number;
  type?: string;
  initiator?: { type: string; stack?: CdpStackTrace };
}

/** Convert one protocol event into a trace record. */
export function toRecord(
  event: CdpRequestWillBeSent,
  topLevelUrl: string,
): RequestRecord {
  const stack =
    event.initiator?.type === "script" ? flattenStack(event.initiator.stack) : [];
  return {
    request_id: event.requestId,
    top_level_url: topLevelUrl,
    frame_url: event.documentURL ?? topLevelUrl,
    resource_type: mapCdpResourceType(event.type),
    url: event.request.url,
    timestamp_ms: Math.max(0, Math.round((event.wallTime ?? 0) * 1000)),
    call_stack: stack,
  };
}

export function writeTrace(records: RequestRecord[], out: string): void {
  const body = records.map((r) => serializeRecord(r) + "\n").join("");
  fs.writeFileSync(out, body);
}

/**
 * Capture one page load. On navigation failure or protocol
 * disconnect, whatever was recorded so far is still written before
 * the error propagates.
 */
export async function capture(options: CaptureOptions): Promise<RequestRecord[]> {
  const settleMs = options.settleMs ?? DEFAULT_SETTLE_MS;
  const browser = options.browserHttpUrl ?? DEFAULT_BROWSER;
  const loadTimeoutMs = options.loadTimeoutMs ?? DEFAULT_LOAD_TIMEOUT_MS;

  const records: RequestRecord[] = [];
  const target = await createTarget(browser);
  const client = await CdpClient.connect(target.webSocketDebuggerUrl);
  let disconnectReason: string | null = null;
  client.onDisconnect = (reason) => {
    disconnectReason = reason;
  };

  client.on("Network.requestWillBeSent", (params: CdpRequestWillBeSent) => {
    records.push(toRecord(params, options.url));
  });

  try {
    await client.send("Network.enable");
    await client.send("Page.enable");
    // Stateless capture: nothing carries over from a previous run.
    await client.send("Network.clearBrowserCookies");
    await client.send("Network.clearBrowserCache");

    const loaded = client.once("Page.loadEventFired", loadTimeoutMs);
    const nav = (await client.send("Page.navigate", { url: options.url })) as {
      errorText?: string;
    };
    if (nav.errorText) {
      throw new CdpError(`navigation failed: ${nav.errorText}`);
    }
    await loaded;
    if (settleMs > 0) {
      await new Promise((resolve) => setTimeout(resolve, settleMs));
    }
    if (disconnectReason !== null) {
      throw new CdpError(disconnectReason);
    }
  } finally {
    // Partial traces are worth keeping: write before unwinding.
    writeTrace(records, options.out);
    client.close();
    await closeTarget(browser, target.id);
  }
  return records;
}
