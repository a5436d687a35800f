/** End-to-end workflow against a live server: load -> pick a cut ->
 * retrieve under two condition settings (different top-5) -> apply a
 * candidate -> export the session -> replay it twice and compare panels.
 *
 * The suite builds tiny artifacts (2-epoch model over 50 corpus molecules)
 * through the CLI, then spawns `molpla serve` on an ephemeral port.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ApiClient } from "../src/api.js";
import { replaySession, type SessionFile } from "../src/model.js";

const PY = process.env.MOLPLA_PYTHON ?? "python3";

let workdir: string;
let server: ChildProcess | null = null;
let base = "";
let api: ApiClient;

const SETUP = `
import sys
from importlib import resources
from molpla.cli import main

root = sys.argv[1]
corpus = (resources.files("molpla") / "data" / "corpus.smi").read_text().split()[:50]
with open(root + "/corpus.smi", "w") as f:
    f.write("\\n".join(corpus) + "\\n")
assert main(["preprocess", "--in", root + "/corpus.smi", "--out", root + "/data",
             "--seed", "7"]) == 0
assert main(["pretrain", "--data", root + "/data", "--out", root + "/run",
             "--d", "12", "--layers", "2", "--batch-size", "32",
             "--epochs", "2", "--seed", "1"]) == 0
assert main(["build-library", "--checkpoint", root + "/run/checkpoint.bin",
             "--data", root + "/data", "--out", root + "/library.bin"]) == 0
print("artifacts-ready")
`;

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "molpla-e2e-"));
  const out = execFileSync(PY, ["-c", SETUP, workdir],
                           { encoding: "utf8", timeout: 300_000 });
  expect(out).toContain("artifacts-ready");

  server = spawn(PY, [
    "-m", "molpla.cli", "serve",
    "--checkpoint", join(workdir, "run", "checkpoint.bin"),
    "--library", join(workdir, "library.bin"),
    "--data", join(workdir, "data"),
    "--host", "127.0.0.1", "--port", "0",
  ], { stdio: ["ignore", "pipe", "inherit"] });

  base = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server start timeout")),
                             60_000);
    server!.stdout!.on("data", (chunk: Buffer) => {
      const m = chunk.toString().match(/serving on (http:\/\/[\d.]+:\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(m[1]);
      }
    });
    server!.on("exit", (code) => reject(new Error(`server exited ${code}`)));
  });
  api = new ApiClient(base);
}, 360_000);

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("live workflow", () => {
  it("completes load -> cut -> retrieve x2 -> apply end to end", async () => {
    const meta = await api.libraryMeta();
    expect(meta["n_rgroups"]).toBeGreaterThan(10);

    const smiles = "Cc1ccc(O)cc1";
    const parsed = await api.parse(smiles);
    expect(parsed.graph.atoms.length).toBe(8);

    const colored = await api.color(smiles);
    expect(colored.scores).toHaveLength(8);
    // centered scores carry both signs: at least two sign-contiguous regions
    const { signClusters } = await import("../src/color.js");
    expect(signClusters(colored.scores, colored.graph.bonds))
      .toBeGreaterThanOrEqual(2);

    const dec = await api.decompose(smiles, 0);
    expect(dec.branches.length).toBeGreaterThan(0);
    const branch = dec.branches[0];

    // two different condition settings yield different top-5 lists
    const withBits = await api.retrieve(branch.query_smiles,
                                        branch.stub_index,
                                        branch.condition_names, 5);
    const noBits = await api.retrieve(branch.query_smiles, branch.stub_index,
                                      [], 5);
    expect(withBits.results.length).toBeGreaterThan(0);
    expect(withBits.results.map((r) => r.key))
      .not.toEqual(noBits.results.map((r) => r.key));

    // apply the branch's own R-group: recovers the original molecule
    const rea = await api.reattach(branch.query_smiles, branch.stub_index,
                                   branch.rgroup_key, smiles);
    expect(rea.candidates.length).toBeGreaterThan(0);
    const keys = rea.candidates.map((c) => c.canonical_key);
    expect(keys).toContain(parsed.canonical_key);
    for (const cand of rea.candidates) {
      expect(cand.valid).toBe(true);
      expect(Object.keys(cand.descriptor_delta).length).toBeGreaterThan(0);
    }
  }, 120_000);

  it("replaying an exported session reproduces identical panels", async () => {
    const session: SessionFile = {
      version: 1,
      events: [
        { type: "load", smiles: "Cc1ccc(O)cc1" },
        { type: "select_cut", branchIndex: 0 },
        { type: "retrieve", k: 5 },
        { type: "set_conditions", names: [] },
        { type: "retrieve", k: 5 },
        { type: "apply", key: (await firstApplicableKey()) },
      ],
    };
    const first = await replaySession(api, session);
    const second = await replaySession(api, session);
    expect(second).toEqual(first);
    expect(first[first.length - 1].historySize).toBe(2);
  }, 120_000);

  it("surfaces API errors as structured objects", async () => {
    await expect(api.parse("C(")).rejects.toMatchObject({
      code: "bad_smiles",
      status: 400,
    });
  });
});

async function firstApplicableKey(): Promise<string> {
  const dec = await api.decompose("Cc1ccc(O)cc1", 0);
  return dec.branches[0].rgroup_key;
}
