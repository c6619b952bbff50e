/**
 * Trace record schema mirrored from the analysis side, plus a
 * byte-stable serializer: keys sorted, no whitespace, one object per
 * line. The emitted bytes must be exactly what the Python
 * `RequestRecord.to_json_line()` produces for the same record.
 */

export interface StackFrame {
  function_name: string; // "" for anonymous functions
  script_url: string;
  line: number;
  column: number;
}

export interface RequestRecord {
  request_id: string;
  top_level_url: string;
  frame_url: string;
  resource_type: string;
  url: string;
  timestamp_ms: number;
  call_stack: StackFrame[];
}

/** Resource types the analysis side accepts verbatim. */
export const RESOURCE_TYPES = new Set([
  "Document",
  "Script",
  "XHR",
  "Fetch",
  "Image",
  "Stylesheet",
  "Subdocument",
  "Other",
]);

/** Map a DevTools-protocol resource type onto the trace schema. */
export function mapCdpResourceType(cdpType: string | undefined): string {
  if (cdpType !== undefined && RESOURCE_TYPES.has(cdpType)) {
    return cdpType;
  }
  return "Other";
}

function sortedStringify(value: unknown): string {
  if (Array.isArray(value)) {
    return "[" + value.map(sortedStringify).join(",") + "]";
  }
  if (value !== null && typeof value === "object") {
    const obj = value as Record<string, unknown>;
    const parts = Object.keys(obj)
      .sort()
      .map((k) => JSON.stringify(k) + ":" + sortedStringify(obj[k]));
    return "{" + parts.join(",") + "}";
  }
  return JSON.stringify(value);
}

/** One JSON line, sorted keys, compact separators, no trailing newline. */
export function serializeRecord(record: RequestRecord): string {
  return sortedStringify(record);
}
