#!/usr/bin/env node
/**
 * capture --url <u> --out <file> [--settle-ms 10000] [--browser http://127.0.0.1:9222]
 */

import { parseArgs } from "node:util";
import { DEFAULT_BROWSER, DEFAULT_SETTLE_MS, capture } from "./capture";

async function main(): Promise<number> {
  const { values, positionals } = parseArgs({
    allowPositionals: true,
    options: {
      url: { type: "string" },
      out: { type: "string" },
      "settle-ms": { type: "string", default: String(DEFAULT_SETTLE_MS) },
      browser: { type: "string", default: DEFAULT_BROWSER },
    },
  });
  if (positionals[0] !== "capture" || !values.url || !values.out) {
    console.error(
      "usage: capture --url <u> --out <file> [--settle-ms 10000] [--browser <http endpoint>]",
    );
    return 2;
  }
  const settleMs = Number(values["settle-ms"]);
  if (!Number.isFinite(settleMs) || settleMs < 0) {
    console.error(`bad --settle-ms value: ${values["settle-ms"]}`);
    return 2;
  }
  try {
    const records = await capture({
      url: values.url,
      out: values.out,
      settleMs,
      browserHttpUrl: values.browser,
    });
    console.error(`captured ${records.length} request(s) -> ${values.out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
