import { describe, expect, it } from "vitest";

import type { GraphJson } from "../src/api.js";
import { cycleBasis, fitToViewport, layoutMolecule } from "../src/layout.js";

function atom(z: number | null = 6, stub = false) {
  return {
    atomic_number: z, formal_charge: 0, chirality_tag: 0, hybridization: 0,
    num_explicit_hs: 0, aromaticity: false, is_stub: stub,
  };
}

function bond(u: number, v: number, type: number | null = 0) {
  return {
    u, v, bond_type: type, bond_direction: 0, bond_stereochemistry: 0,
    conjugation: false, aromaticity: type === 3,
  };
}

function ringGraph(n: number): GraphJson {
  return {
    atoms: Array.from({ length: n }, () => atom()),
    bonds: Array.from({ length: n }, (_, i) => bond(i, (i + 1) % n, 3)),
  };
}

describe("cycleBasis", () => {
  it("finds the benzene ring", () => {
    const rings = cycleBasis(ringGraph(6));
    expect(rings).toHaveLength(1);
    expect(rings[0]).toHaveLength(6);
  });

  it("finds two rings in naphthalene-shaped fusion", () => {
    const g: GraphJson = {
      atoms: Array.from({ length: 10 }, () => atom()),
      bonds: [
        bond(0, 1), bond(1, 2), bond(2, 3), bond(3, 4), bond(4, 5),
        bond(5, 0), bond(4, 6), bond(6, 7), bond(7, 8), bond(8, 9),
        bond(9, 5),
      ],
    };
    expect(cycleBasis(g)).toHaveLength(2);
  });

  it("empty for chains", () => {
    const g: GraphJson = {
      atoms: [atom(), atom(), atom()],
      bonds: [bond(0, 1), bond(1, 2)],
    };
    expect(cycleBasis(g)).toHaveLength(0);
  });
});

describe("layoutMolecule", () => {
  it("places benzene on a regular hexagon", () => {
    const pos = layoutMolecule(ringGraph(6));
    expect(pos).toHaveLength(6);
    // all ring bond lengths equal 1, all atoms equidistant from centroid
    const cx = pos.reduce((s, p) => s + p.x, 0) / 6;
    const cy = pos.reduce((s, p) => s + p.y, 0) / 6;
    const radii = pos.map((p) => Math.hypot(p.x - cx, p.y - cy));
    for (const r of radii) expect(r).toBeCloseTo(radii[0], 6);
    for (let i = 0; i < 6; i++) {
      const q = pos[(i + 1) % 6];
      expect(Math.hypot(q.x - pos[i].x, q.y - pos[i].y)).toBeCloseTo(1, 6);
    }
  });

  it("keeps acyclic bond lengths near the target", () => {
    const g: GraphJson = {
      atoms: Array.from({ length: 5 }, () => atom()),
      bonds: [bond(0, 1), bond(1, 2), bond(2, 3), bond(2, 4)],
    };
    const pos = layoutMolecule(g);
    for (const b of g.bonds) {
      const d = Math.hypot(pos[b.v].x - pos[b.u].x, pos[b.v].y - pos[b.u].y);
      expect(d).toBeGreaterThan(0.5);
      expect(d).toBeLessThan(1.8);
    }
  });

  it("separates disconnected components", () => {
    const g: GraphJson = {
      atoms: [atom(), atom(), atom(), atom()],
      bonds: [bond(0, 1), bond(2, 3)],
    };
    const pos = layoutMolecule(g);
    const d = Math.hypot(pos[2].x - pos[0].x, pos[2].y - pos[0].y);
    expect(d).toBeGreaterThan(1.0);
  });

  it("no overlapping atoms on a substituted ring", () => {
    const g = ringGraph(6);
    g.atoms.push(atom(8), atom(6, true));
    g.bonds.push(bond(0, 6), bond(3, 7, null));
    const pos = layoutMolecule(g);
    for (let i = 0; i < pos.length; i++) {
      for (let j = i + 1; j < pos.length; j++) {
        const d = Math.hypot(pos[j].x - pos[i].x, pos[j].y - pos[i].y);
        expect(d).toBeGreaterThan(0.3);
      }
    }
  });
});

describe("fitToViewport", () => {
  it("maps into the padded box", () => {
    const pts = [{ x: -3, y: 2 }, { x: 5, y: -1 }, { x: 0, y: 0 }];
    const out = fitToViewport(pts, 400, 300, 20);
    for (const p of out) {
      expect(p.x).toBeGreaterThanOrEqual(19.9);
      expect(p.x).toBeLessThanOrEqual(380.1);
      expect(p.y).toBeGreaterThanOrEqual(19.9);
      expect(p.y).toBeLessThanOrEqual(280.1);
    }
  });
});
