/** The scripted end-to-end flow: drive the real UI code in a DOM against a
 * live annotation service backed by the real extraction pipeline.
 *
 * login -> personal skill page -> move a slider -> submit, then verify
 * through an independent GET that the rating persisted server-side, and
 * that nothing served to the member session carries model estimates.
 */

import { ChildProcess, spawn } from "node:child_process";
import { existsSync, mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { mountApp } from "../src/app.js";
import { setInput, submitForm, click, waitFor } from "./helpers/dom.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const SERVE_FIXTURE = join(HERE, "helpers", "serve_fixture.py");
const DIST_INDEX = join(HERE, "..", "dist", "index.html");

const MEMBER_ID = "UID0";
const MEMBER_EMAIL = "uid0@example.com";
const MEMBER_PASSWORD = "pw-uid0-rehearsal";

// happy-dom enforces the Same-Origin Policy; in production the UI is
// served by the API process itself, so the faithful setup is to give the
// simulated page the live server's origin once the port is known.
function adoptOrigin(url: string): void {
  const handle = (globalThis as { happyDOM?: { setURL?: (url: string) => void } }).happyDOM;
  if (handle?.setURL === undefined) {
    throw new Error("happy-dom handle unavailable; cannot set the page origin");
  }
  handle.setURL(url);
}

const realFetch = (input: string, init?: RequestInit) => globalThis.fetch(input, init);

let child: ChildProcess | null = null;
let storeDir = "";
let baseUrl = "";

function $(selector: string): HTMLElement {
  const el = document.querySelector<HTMLElement>(selector);
  if (el === null) {
    throw new Error(`missing element: ${selector}`);
  }
  return el;
}

beforeAll(async () => {
  if (!existsSync(DIST_INDEX)) {
    throw new Error("frontend/dist is missing; run `npm run build` before the tests");
  }
  storeDir = mkdtempSync(join(tmpdir(), "skillmap-ui-e2e-"));
  child = spawn("python3", [SERVE_FIXTURE, storeDir], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  baseUrl = await new Promise<string>((resolve, reject) => {
    let out = "";
    let err = "";
    const timer = setTimeout(
      () => reject(new Error(`service not ready in time\nstdout: ${out}\nstderr: ${err}`)),
      50_000,
    );
    child?.stdout?.on("data", (data: Buffer) => {
      out += String(data);
      const match = /PORT (\d+)/.exec(out);
      if (match) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${match[1]}`);
      }
    });
    child?.stderr?.on("data", (data: Buffer) => {
      err += String(data);
    });
    child?.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early (${code})\nstdout: ${out}\nstderr: ${err}`));
    });
  });
  adoptOrigin(`${baseUrl}/`);
}, 60_000);

afterAll(() => {
  child?.kill("SIGTERM");
  if (storeDir) {
    rmSync(storeDir, { recursive: true, force: true });
  }
});

describe("live annotation flow", () => {
  it("serves the UI shell from the API process", async () => {
    const response = await realFetch(`${baseUrl}/`);
    expect(response.status).toBe(200);
    const html = await response.text();
    expect(html).toContain('<div id="app"></div>');
    expect(html).toContain('src="./main.js"');
  });

  it("logs in, rates skills, submits, and the scores persist", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const client = new ApiClient(baseUrl, realFetch);
    mountApp($("#app"), client);

    // Log in through the form.
    setInput($("#email") as HTMLInputElement, MEMBER_EMAIL);
    setInput($("#password") as HTMLInputElement, MEMBER_PASSWORD);
    submitForm($("#login-form") as HTMLFormElement);
    await waitFor(() => document.querySelector("#skills-view"), 15_000);

    // The personal page lists real extracted terms, alphabetically, all
    // initially unrated (fresh store), with grid-constrained sliders.
    const rows = [...document.querySelectorAll<HTMLElement>("li.skill-row")];
    expect(rows.length).toBeGreaterThanOrEqual(2);
    const terms = rows.map((li) => li.dataset["term"] ?? "");
    expect(terms).toEqual([...terms].sort());
    for (const li of rows) {
      expect(li.classList.contains("unrated")).toBe(true);
      const slider = li.querySelector<HTMLInputElement>(".score-slider");
      expect(slider?.step).toBe("5");
    }

    // Rate two skills; one through an off-grid write that must snap.
    const [first, second] = rows as [HTMLElement, HTMLElement];
    const firstTerm = first.dataset["term"] ?? "";
    const secondTerm = second.dataset["term"] ?? "";
    setInput(first.querySelector(".score-slider") as HTMLInputElement, "80");
    setInput(second.querySelector(".score-slider") as HTMLInputElement, "37");
    expect((second.querySelector(".score-slider") as HTMLInputElement).value).toBe("35");

    click($("#submit-btn"));
    await waitFor(() => $("#banner").textContent === "saved 2 ratings", 15_000);
    expect(first.classList.contains("dirty")).toBe(false);

    // Independent verification straight against the service.
    const check = await realFetch(`${baseUrl}/members/${MEMBER_ID}/skills`, {
      headers: { authorization: `Bearer ${client.token}` },
    });
    expect(check.status).toBe(200);
    const body = await check.text();
    const scores = new Map(
      (JSON.parse(body) as { term: string; self_score: number | null }[]).map((row) => [
        row.term,
        row.self_score,
      ]),
    );
    expect(scores.get(firstTerm)).toBe(80);
    expect(scores.get(secondTerm)).toBe(35);

    // The member response carries no estimates, under any spelling.
    expect(body).not.toContain("estimated");
  });
});
