import { describe, expect, it } from "vitest";

import { LatestOnly } from "../src/api.js";
import { SESSION_FORMAT_VERSION, SessionModel, parseSessionFile } from "../src/model.js";

const desc = (mw: number) => ({ heavy_atoms: 5, mol_weight: mw });

describe("SessionModel history tree", () => {
  it("applying candidates branches without mutating ancestors", () => {
    const m = new SessionModel();
    const root = m.load("c1ccccc1", desc(78));
    const rootSnapshot = JSON.stringify({ ...root, children: undefined });
    const a = m.apply("Cc1ccccc1", desc(92), "C~*");
    m.checkout(root.id);
    const b = m.apply("Oc1ccccc1", desc(94), "O~*");
    expect(m.nodes.size).toBe(3);
    expect(m.nodes.get(root.id)!.children).toEqual([a.id, b.id]);
    expect(a.parentId).toBe(root.id);
    expect(b.parentId).toBe(root.id);
    // ancestor fields untouched
    const after = m.nodes.get(root.id)!;
    expect(JSON.stringify({ ...after, children: undefined }))
      .toBe(rootSnapshot);
  });

  it("checkout moves the cursor; unknown ids throw", () => {
    const m = new SessionModel();
    const root = m.load("C", desc(16));
    m.apply("CC", desc(30), "C~*");
    m.checkout(root.id);
    expect(m.currentId).toBe(root.id);
    expect(() => m.checkout(999)).toThrow();
  });

  it("lineage deltas walk root-to-node", () => {
    const m = new SessionModel();
    m.load("C", desc(16));
    m.apply("CC", desc(30), "C~*");
    m.apply("CCO", desc(46), "O~*");
    const deltas = m.lineageDeltas(m.currentId!);
    expect(deltas).toHaveLength(2);
    expect(deltas[0][1]).toEqual({ key: "mol_weight", before: 16, after: 30 });
    expect(deltas[1][1]).toEqual({ key: "mol_weight", before: 30, after: 46 });
  });

  it("export carries the event log; import validates the version", () => {
    const m = new SessionModel();
    m.record({ type: "load", smiles: "C" });
    m.record({ type: "select_cut", branchIndex: 0 });
    const text = JSON.stringify(m.exportSession());
    const back = parseSessionFile(text);
    expect(back.version).toBe(SESSION_FORMAT_VERSION);
    expect(back.events).toHaveLength(2);
    expect(() => parseSessionFile('{"version": 99, "events": []}')).toThrow();
  });
});

describe("LatestOnly", () => {
  it("drops responses that lost the race", async () => {
    const gate = new LatestOnly<string>();
    let releaseFirst!: (v: string) => void;
    const first = gate.run(() => new Promise<string>((res) => {
      releaseFirst = res;
    }));
    const second = await gate.run(async () => "second");
    expect(second).toBe("second");
    releaseFirst("first");
    expect(await first).toBeNull(); // stale response discarded
  });

  it("passes through in-order responses", async () => {
    const gate = new LatestOnly<number>();
    expect(await gate.run(async () => 1)).toBe(1);
    expect(await gate.run(async () => 2)).toBe(2);
  });
});
