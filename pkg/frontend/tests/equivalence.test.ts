// Walks a 3-sentence fixture through the real browser UI (jsdom DOM events,
// native selections) against a live `narevents serve` instance, then posts
// the same decisions directly to a second instance, and requires the two
// annotation logs to be byte-identical.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationClient } from "../src/api";
import { AnnotatorApp } from "../src/view";

const FIXTURE_CONLLU = `# newdoc id = f1
# narrator = spk1
# sent_id = f1-s0
# text = Alice saw the dog .
1\tAlice\talice\tPROPN\t_\t_\t2\tnsubj\t_\t_
2\tsaw\tsee\tVERB\t_\t_\t0\troot\t_\t_
3\tthe\tthe\tDET\t_\t_\t4\tdet\t_\t_
4\tdog\tdog\tNOUN\t_\t_\t2\tobj\t_\t_
5\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

# sent_id = f1-s1
# text = Bob smiled .
1\tBob\tbob\tPROPN\t_\t_\t2\tnsubj\t_\t_
2\tsmiled\tsmile\tVERB\t_\t_\t0\troot\t_\t_
3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

# sent_id = f1-s2
# text = Carol is Dave 's friend .
1\tCarol\tcarol\tPROPN\t_\t_\t5\tnsubj\t_\t_
2\tis\tbe\tAUX\t_\t_\t5\tcop\t_\t_
3\tDave\tdave\tPROPN\t_\t_\t5\tnmod:poss\t_\t_
4\t's\t's\tPART\t_\t_\t3\tcase\t_\t_
5\tfriend\tfriend\tNOUN\t_\t_\t0\troot\t_\t_
6\t.\t.\tPUNCT\t_\t_\t5\tpunct\t_\t_
`;

// the same three sentence-level decisions, in both drivers
const DECISIONS = [
  { selected: ["f1:0:0"], span: "the dog" },
  { selected: [], span: null },
  { selected: ["f1:2:0"], span: "friend" }
] as const;

let workdir: string;
const servers: ChildProcess[] = [];

function cli(args: string[]): void {
  execFileSync("narevents", args, { cwd: workdir, stdio: "pipe" });
}

async function startServer(port: number, logName: string): Promise<string> {
  const proc = spawn(
    "narevents",
    [
      "serve",
      "--corpus", join(workdir, "corpus.jsonl"),
      "--candidates", join(workdir, "reduced.jsonl"),
      "--log", join(workdir, logName),
      "--port", String(port),
      "--logical-clock"
    ],
    { stdio: "pipe" }
  );
  servers.push(proc);
  const base = `http://127.0.0.1:${port}`;
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${base}/openapi.json`);
      if (response.ok) return base;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(`server on :${port} did not come up`);
}

beforeAll(() => {
  workdir = mkdtempSync(join(tmpdir(), "narevents-ui-"));
  writeFileSync(join(workdir, "fixture.conllu"), FIXTURE_CONLLU);
  writeFileSync(join(workdir, "meta.json"), JSON.stringify({ f1: { split: "train" } }));
  cli([
    "ingest", "fixture.conllu",
    "--metadata", "meta.json",
    "--out", "corpus.jsonl"
  ]);
  cli(["extract", "--corpus", "corpus.jsonl", "--out", "candidates.jsonl"]);
  cli(["reduce", "--candidates", "candidates.jsonl", "--out", "reduced.jsonl"]);
});

afterAll(() => {
  for (const proc of servers) proc.kill();
});

function selectSpan(needle: string): void {
  const sentenceEl = document.querySelector(".current-sentence")!;
  const text = sentenceEl.firstChild as Text;
  const start = text.data.indexOf(needle);
  expect(start).toBeGreaterThanOrEqual(0);
  const range = document.createRange();
  range.setStart(text, start);
  range.setEnd(text, start + needle.length);
  const selection = document.getSelection()!;
  selection.removeAllRanges();
  selection.addRange(range);
}

describe("UI / API equivalence", () => {
  it("a scripted UI walkthrough writes the same log bytes as direct API calls", async () => {
    // --- run 1: through the browser UI -----------------------------------
    const uiBase = await startServer(8931, "ui.log");
    document.body.innerHTML = '<div id="app"></div>';
    const app = new AnnotatorApp(
      document.getElementById("app")!,
      new AnnotationClient(uiBase)
    );
    await app.start("a1", "f1");

    for (const step of DECISIONS) {
      for (const candidateId of step.selected) {
        const checkbox = [...document.querySelectorAll<HTMLInputElement>(
          ".candidate-item input"
        )].find((box) => box.value === candidateId);
        expect(checkbox).toBeDefined();
        checkbox!.click();
      }
      if (step.span !== null) {
        selectSpan(step.span);
        document
          .querySelector<HTMLButtonElement>(".add-span-button")!
          .click();
        expect(app.state!.pendingSpans).toHaveLength(1);
      }
      await app.submitAndAdvance();
      expect(app.state!.status.kind).toBe("idle");
    }
    expect(app.state!.complete).toBe(true);
    expect(document.querySelector(".completion-screen")).not.toBeNull();

    // --- run 2: the same decisions straight at the API -------------------
    const apiBase = await startServer(8932, "api.log");
    const client = new AnnotationClient(apiBase);
    const session = await client.createSession("a1", "f1");
    const sentences = [
      "Alice saw the dog .",
      "Bob smiled .",
      "Carol is Dave 's friend ."
    ];
    for (let position = 0; position < DECISIONS.length; position++) {
      const step = DECISIONS[position];
      const spans = [];
      if (step.span !== null) {
        const start = sentences[position].indexOf(step.span);
        spans.push({
          char_start: start,
          char_end: start + step.span.length,
          text: step.span
        });
      }
      await client.submitAnnotation(
        session.session_id,
        position,
        [...step.selected],
        spans
      );
    }

    const uiLog = readFileSync(join(workdir, "ui.log"));
    const apiLog = readFileSync(join(workdir, "api.log"));
    expect(uiLog.length).toBeGreaterThan(0);
    expect(uiLog.equals(apiLog)).toBe(true);
  });
});
