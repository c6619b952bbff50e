/**
 * Static file server for the bundled fixture pages, so captures and
 * tests run entirely offline.
 */

import * as fs from "node:fs";
import * as http from "node:http";
import * as path from "node:path";

const CONTENT_TYPES: Record<string, string> = {
  ".html": "text/html",
  ".js": "text/javascript",
  ".json": "application/json",
  ".gif": "image/gif",
  ".png": "image/png",
  ".txt": "text/plain",
};

export const FIXTURES_DIR = path.join(__dirname, "..", "fixtures");

export interface FixtureServer {
  port: number;
  close(): Promise<void>;
}

export function startFixtureServer(
  root: string = FIXTURES_DIR,
  port = 0,
): Promise<FixtureServer> {
  const server = http.createServer((req, res) => {
    const urlPath = new URL(req.url ?? "/", "http://localhost").pathname;
    const rel = urlPath === "/" ? "index.html" : urlPath.replace(/^\/+/, "");
    const file = path.normalize(path.join(root, rel));
    if (!file.startsWith(path.normalize(root) + path.sep) && file !== path.normalize(root)) {
      res.writeHead(403).end("forbidden");
      return;
    }
    fs.readFile(file, (err, data) => {
      if (err) {
        res.writeHead(404).end("not found");
        return;
      }
      const type = CONTENT_TYPES[path.extname(file)] ?? "application/octet-stream";
      res.writeHead(200, { "content-type": type }).end(data);
    });
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no listen address"));
        return;
      }
      resolve({
        port: address.port,
        close: () => new Promise((done) => server.close(() => done())),
      });
    });
  });
}

if (require.main === module) {
  const port = Number(process.argv[2] ?? 8080);
  startFixtureServer(FIXTURES_DIR, port).then((srv) => {
    console.log(`serving fixtures on http://127.0.0.1:${srv.port}/`);
  });
}
