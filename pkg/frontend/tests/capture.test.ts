import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { CdpRequestWillBeSent, capture, flattenStack, toRecord } from "../src/capture";
import { FIXTURES_DIR, FixtureServer, startFixtureServer } from "../src/fixture-server";
import { serializeRecord } from "../src/trace";
import { MockBrowser, PageScript } from "./mock-cdp";

const WALL_TIME = 1_700_000_000.25;

/** The events a browser would produce while loading fixtures/index.html. */
function indexPageEvents(base: string): CdpRequestWillBeSent[] {
  const appJs = `${base}/app.js`;
  return [
    {
      requestId: "1000.1",
      documentURL: `${base}/`,
      request: { url: `${base}/` },
      wallTime: WALL_TIME,
      type: "Document",
      initiator: { type: "other" },
    },
    {
      requestId: "1000.2",
      documentURL: `${base}/`,
      request: { url: appJs },
      wallTime: WALL_TIME + 0.01,
      type: "Script",
      initiator: { type: "parser" },
    },
    {
      requestId: "1000.3",
      documentURL: `${base}/`,
      request: { url: `${base}/trk/pixel.gif?cb=1` },
      wallTime: WALL_TIME + 0.02,
      type: "Fetch",
      initiator: {
        type: "script",
        stack: {
          callFrames: [
            { functionName: "sendBeacon", url: appJs, lineNumber: 3, columnNumber: 9 },
            { functionName: "", url: appJs, lineNumber: 12, columnNumber: 0 },
          ],
        },
      },
    },
    {
      requestId: "1000.4",
      documentURL: `${base}/`,
      request: { url: `${base}/content/data.json` },
      wallTime: WALL_TIME + 0.03,
      type: "Fetch",
      initiator: {
        type: "script",
        stack: {
          callFrames: [
            { functionName: "loadContent", url: appJs, lineNumber: 7, columnNumber: 9 },
            { functionName: "", url: appJs, lineNumber: 13, columnNumber: 0 },
          ],
        },
      },
    },
  ];
}

function staticPageEvents(base: string): CdpRequestWillBeSent[] {
  return [
    {
      requestId: "2000.1",
      documentURL: `${base}/static.html`,
      request: { url: `${base}/static.html` },
      wallTime: WALL_TIME,
      type: "Document",
      initiator: { type: "other" },
    },
    {
      requestId: "2000.2",
      documentURL: `${base}/static.html`,
      request: { url: `${base}/img.png` },
      wallTime: WALL_TIME + 0.01,
      type: "Image",
      initiator: { type: "parser" },
    },
  ];
}

describe("flattenStack", () => {
  it("keeps synchronous frames most recent first", () => {
    const frames = flattenStack({
      callFrames: [
        { functionName: "inner", url: "a.js", lineNumber: 5, columnNumber: 1 },
        { functionName: "outer", url: "b.js", lineNumber: 9, columnNumber: 2 },
      ],
    });
    expect(frames.map((f) => f.function_name)).toEqual(["inner", "outer"]);
  });

  it("appends async parent segments in ancestor order", () => {
    const frames = flattenStack({
      callFrames: [{ functionName: "cb", url: "a.js", lineNumber: 1, columnNumber: 0 }],
      parent: {
        callFrames: [{ functionName: "scheduler", url: "b.js", lineNumber: 2, columnNumber: 0 }],
        parent: {
          callFrames: [{ functionName: "main", url: "c.js", lineNumber: 3, columnNumber: 0 }],
        },
      },
    });
    expect(frames.map((f) => [f.function_name, f.script_url])).toEqual([
      ["cb", "a.js"],
      ["scheduler", "b.js"],
      ["main", "c.js"],
    ]);
  });

  it("drops frames without a script URL", () => {
    const frames = flattenStack({
      callFrames: [
        { functionName: "native", url: "", lineNumber: 0, columnNumber: 0 },
        { functionName: "f", url: "a.js", lineNumber: 1, columnNumber: 1 },
      ],
    });
    expect(frames).toHaveLength(1);
    expect(frames[0].script_url).toBe("a.js");
  });

  it("handles a missing stack", () => {
    expect(flattenStack(undefined)).toEqual([]);
  });
});

describe("toRecord", () => {
  it("uses an empty stack for non-script initiators", () => {
    const [doc] = indexPageEvents("http://x.test");
    const record = toRecord(doc, "http://x.test/");
    expect(record.call_stack).toEqual([]);
    expect(record.resource_type).toBe("Document");
    expect(record.timestamp_ms).toBe(Math.round(WALL_TIME * 1000));
  });

  it("maps unknown resource types to Other", () => {
    const event = { ...indexPageEvents("http://x.test")[0], type: "Ping" };
    expect(toRecord(event, "http://x.test/").resource_type).toBe("Other");
  });
});

describe("capture against a mock browser", () => {
  let fixtures: FixtureServer;
  let tmpDir: string;

  beforeEach(async () => {
    fixtures = await startFixtureServer();
    tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "capture-"));
  });

  afterEach(async () => {
    await fixtures.close();
    fs.rmSync(tmpDir, { recursive: true, force: true });
  });

  function pageUrl(p = "/"): string {
    return `http://127.0.0.1:${fixtures.port}${p}`;
  }

  async function run(script: (url: string) => PageScript, out: string, settleMs = 50) {
    const browser = new MockBrowser(script);
    await browser.start();
    try {
      return await capture({
        url: pageUrl(),
        out,
        settleMs,
        browserHttpUrl: browser.httpUrl,
        loadTimeoutMs: 2000,
      });
    } finally {
      await browser.close();
    }
  }

  it("round-trips through the analysis pipeline", async () => {
    const out = path.join(tmpDir, "trace.jsonl");
    const records = await run(
      () => ({ beforeLoad: indexPageEvents(pageUrl("").replace(/\/$/, "")) }),
      out,
    );
    expect(records).toHaveLength(4);

    // The analysis side must accept the file with zero diagnostics and
    // agree byte-for-byte with its own serialization of each record.
    const check = execFileSync(
      "python3",
      [
        "-c",
        [
          "import sys",
          "from websift.trace import parse_trace_file",
          "records, diags = parse_trace_file(sys.argv[1])",
          "assert not diags, diags",
          "lines = [l for l in open(sys.argv[1]).read().splitlines() if l]",
          "assert [r.to_json_line() for r in records] == lines",
          "print(len(records))",
        ].join("\n"),
        out,
      ],
      { encoding: "utf-8" },
    );
    expect(check.trim()).toBe("4");

    const labelled = execFileSync(
      "websift",
      [
        "label",
        "--traces", out,
        "--filters", path.join(FIXTURES_DIR, "filters.txt"),
        "--psl", path.join(FIXTURES_DIR, "psl.dat"),
      ],
      { encoding: "utf-8" },
    );
    const labels = labelled
      .trim()
      .split("\n")
      .map((line) => JSON.parse(line));
    expect(labels).toHaveLength(2); // only the script-initiated fetches
    const byUrl = new Map(labels.map((l) => [l.url as string, l.label as string]));
    expect(byUrl.get(pageUrl("/trk/pixel.gif?cb=1"))).toBe("tracking");
    expect(byUrl.get(pageUrl("/content/data.json"))).toBe("functional");
  });

  it("records static subresources with empty stacks", async () => {
    const out = path.join(tmpDir, "static.jsonl");
    const records = await run(
      () => ({ beforeLoad: staticPageEvents(pageUrl("").replace(/\/$/, "")) }),
      out,
    );
    expect(records).toHaveLength(2);
    expect(records.every((r) => r.call_stack.length === 0)).toBe(true);
  });

  it("clears cookies and cache before navigating", async () => {
    const browser = new MockBrowser(() => ({ beforeLoad: [] }));
    await browser.start();
    try {
      await capture({
        url: pageUrl(),
        out: path.join(tmpDir, "t.jsonl"),
        settleMs: 0,
        browserHttpUrl: browser.httpUrl,
        loadTimeoutMs: 2000,
      });
    } finally {
      await browser.close();
    }
    const navigateAt = browser.commandLog.indexOf("Page.navigate");
    expect(browser.commandLog.indexOf("Network.clearBrowserCookies")).toBeLessThan(navigateAt);
    expect(browser.commandLog.indexOf("Network.clearBrowserCache")).toBeLessThan(navigateAt);
  });

  it("stays well-formed with settle-ms 0, possibly missing late requests", async () => {
    const out = path.join(tmpDir, "settle0.jsonl");
    const base = pageUrl("").replace(/\/$/, "");
    const events = indexPageEvents(base);
    const records = await run(
      () => ({ beforeLoad: events.slice(0, 2), afterLoad: events.slice(2) }),
      out,
      0,
    );
    expect(records).toHaveLength(2);
    for (const line of fs.readFileSync(out, "utf-8").trim().split("\n")) {
      expect(() => JSON.parse(line)).not.toThrow();
    }
  });

  it("reports navigation failure and preserves the partial trace", async () => {
    const out = path.join(tmpDir, "fail.jsonl");
    await expect(
      run(() => ({ navigateError: "net::ERR_NAME_NOT_RESOLVED", beforeLoad: [] }), out),
    ).rejects.toThrow(/navigation failed/);
    expect(fs.existsSync(out)).toBe(true);
  });

  it("reports protocol disconnect and preserves the partial trace", async () => {
    const out = path.join(tmpDir, "drop.jsonl");
    const base = pageUrl("").replace(/\/$/, "");
    await expect(
      run(
        () => ({ dropAfterNavigate: true, beforeLoad: indexPageEvents(base).slice(0, 1) }),
        out,
      ),
    ).rejects.toThrow(/closed|error/);
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n").filter(Boolean);
    expect(lines).toHaveLength(1);
    expect(JSON.parse(lines[0]).resource_type).toBe("Document");
  });

  it("serializer output is stable regardless of key insertion order", () => {
    const record = toRecord(indexPageEvents("http://x.test")[2], "http://x.test/");
    const reordered = JSON.parse(JSON.stringify(record));
    expect(serializeRecord(reordered)).toBe(serializeRecord(record));
  });
});
