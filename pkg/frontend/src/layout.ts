/** Client-side 2D coordinates: rings drawn as regular polygons, acyclic
 * parts refined force-directed. Approximate and purely cosmetic — no
 * chemistry beyond the graph topology lives here. */

import type { GraphJson } from "./api.js";

export interface Point {
  x: number;
  y: number;
}

const BOND_LEN = 1.0;

interface Adj {
  n: number;
  neighbors: number[][];
  bondKeys: Set<string>;
}

function buildAdj(graph: GraphJson): Adj {
  const neighbors: number[][] = graph.atoms.map(() => []);
  const bondKeys = new Set<string>();
  for (const b of graph.bonds) {
    neighbors[b.u].push(b.v);
    neighbors[b.v].push(b.u);
    bondKeys.add(bondKey(b.u, b.v));
  }
  return { n: graph.atoms.length, neighbors, bondKeys };
}

export function bondKey(u: number, v: number): string {
  return u < v ? `${u}-${v}` : `${v}-${u}`;
}

/** Smallest cycle through each edge, GF(2)-independent set (enough rings to
 * place polygons; this mirrors standard cycle-basis construction). */
export function cycleBasis(graph: GraphJson): number[][] {
  const adj = buildAdj(graph);
  const dim = graph.bonds.length - adj.n + countComponents(adj);
  if (dim <= 0) return [];
  const candidates: number[][] = [];
  for (const b of graph.bonds) {
    const cyc = shortestCycleThrough(adj, b.u, b.v);
    if (cyc) candidates.push(cyc);
  }
  candidates.sort((a, b) => a.length - b.length);
  const bondIndex = new Map<string, number>();
  graph.bonds.forEach((b, i) => bondIndex.set(bondKey(b.u, b.v), i));
  const basis: bigint[] = [];
  const rings: number[][] = [];
  const seen = new Set<string>();
  for (const cyc of candidates) {
    const canon = [...cyc].sort((a, b) => a - b).join(",");
    if (seen.has(canon)) continue;
    seen.add(canon);
    let vec = 0n;
    for (let i = 0; i < cyc.length; i++) {
      const k = bondIndex.get(bondKey(cyc[i], cyc[(i + 1) % cyc.length]))!;
      vec |= 1n << BigInt(k);
    }
    for (const b of basis) {
      const x = vec ^ b;
      if (x < vec) vec = x;
    }
    if (vec !== 0n) {
      basis.push(vec);
      basis.sort((a, b) => (a > b ? -1 : a < b ? 1 : 0));
      rings.push(cyc);
      if (rings.length === dim) break;
    }
  }
  return rings;
}

function countComponents(adj: Adj): number {
  const seen = new Array(adj.n).fill(false);
  let count = 0;
  for (let s = 0; s < adj.n; s++) {
    if (seen[s]) continue;
    count++;
    const stack = [s];
    seen[s] = true;
    while (stack.length) {
      const i = stack.pop()!;
      for (const j of adj.neighbors[i]) {
        if (!seen[j]) {
          seen[j] = true;
          stack.push(j);
        }
      }
    }
  }
  return count;
}

function shortestCycleThrough(adj: Adj, u: number, v: number): number[] | null {
  const parent = new Map<number, number>([[u, -1]]);
  const queue = [u];
  while (queue.length) {
    const i = queue.shift()!;
    for (const j of adj.neighbors[i]) {
      if (i === u && j === v) continue;
      if (!parent.has(j)) {
        parent.set(j, i);
        if (j === v) {
          const path = [v];
          while (path[path.length - 1] !== u) {
            path.push(parent.get(path[path.length - 1])!);
          }
          return path;
        }
        queue.push(j);
      }
    }
  }
  return null;
}

/** Regular-polygon placement for ring atoms, BFS growth for the rest, then
 * a short force-directed relaxation with ring atoms pinned. */
export function layoutMolecule(graph: GraphJson): Point[] {
  const n = graph.atoms.length;
  if (n === 0) return [];
  const adj = buildAdj(graph);
  const pos: (Point | null)[] = new Array(n).fill(null);
  const pinned = new Array(n).fill(false);

  const rings = cycleBasis(graph);
  for (const ring of rings) {
    placeRing(ring, pos, pinned);
  }

  // grow remaining atoms breadth-first from placed neighbors
  let guard = 0;
  while (pos.some((p) => p === null) && guard++ < n + 5) {
    for (let i = 0; i < n; i++) {
      if (pos[i] !== null) continue;
      const placed = adj.neighbors[i].filter((j) => pos[j] !== null);
      if (placed.length === 0) continue;
      const anchor = pos[placed[0]]!;
      const siblings = adj.neighbors[placed[0]].filter((j) => pos[j] !== null);
      let angle = Math.PI / 6 + siblings.length * (2 * Math.PI / 3);
      if (siblings.length) {
        const s = pos[siblings[0]]!;
        angle = Math.atan2(anchor.y - s.y, anchor.x - s.x) +
          (siblings.length % 2 ? 1 : -1) * Math.PI / 3;
      }
      pos[i] = {
        x: anchor.x + BOND_LEN * Math.cos(angle),
        y: anchor.y + BOND_LEN * Math.sin(angle),
      };
    }
    // disconnected component with nothing placed yet: seed it
    if (pos.some((p) => p === null) &&
        !pos.some((p, i) => p === null &&
          adj.neighbors[i].some((j) => pos[j] !== null))) {
      const i = pos.findIndex((p) => p === null);
      const maxX = Math.max(0, ...pos.filter((p): p is Point => !!p)
        .map((p) => p.x));
      pos[i] = { x: maxX + 2.5 * BOND_LEN, y: 0 };
    }
  }
  for (let i = 0; i < n; i++) {
    if (pos[i] === null) pos[i] = { x: i * BOND_LEN, y: 0 };
  }

  relax(graph, pos as Point[], pinned);
  return pos as Point[];
}

function placeRing(ring: number[], pos: (Point | null)[], pinned: boolean[]) {
  const k = ring.length;
  const r = BOND_LEN / (2 * Math.sin(Math.PI / k));
  const placedIdx = ring.map((a, i) => [a, i] as const)
    .filter(([a]) => pos[a] !== null);
  let cx = 0;
  let cy = 0;
  let phase = -Math.PI / 2;
  if (placedIdx.length >= 2) {
    // fused ring: share the placed edge, reflect the center away from it
    const [a0, i0] = placedIdx[0];
    const [a1] = placedIdx[1];
    const p0 = pos[a0]!;
    const p1 = pos[a1]!;
    const mx = (p0.x + p1.x) / 2;
    const my = (p0.y + p1.y) / 2;
    const dx = p1.x - p0.x;
    const dy = p1.y - p0.y;
    const apo = Math.sqrt(Math.max(r * r - BOND_LEN * BOND_LEN / 4, 0));
    const nx = -dy;
    const ny = dx;
    const norm = Math.hypot(nx, ny) || 1;
    cx = mx + (apo * nx) / norm;
    cy = my + (apo * ny) / norm;
    phase = Math.atan2(p0.y - cy, p0.x - cx) - (2 * Math.PI * i0) / k;
  } else if (placedIdx.length === 1) {
    const [a0, i0] = placedIdx[0];
    const p0 = pos[a0]!;
    cx = p0.x + r;
    cy = p0.y;
    phase = Math.atan2(p0.y - cy, p0.x - cx) - (2 * Math.PI * i0) / k;
  }
  for (let i = 0; i < k; i++) {
    const a = ring[i];
    if (pos[a] === null) {
      const t = phase + (2 * Math.PI * i) / k;
      pos[a] = { x: cx + r * Math.cos(t), y: cy + r * Math.sin(t) };
    }
    pinned[a] = true;
  }
}

function relax(graph: GraphJson, pos: Point[], pinned: boolean[],
               iterations = 120) {
  const n = pos.length;
  for (let it = 0; it < iterations; it++) {
    const force: Point[] = pos.map(() => ({ x: 0, y: 0 }));
    // springs along bonds
    for (const b of graph.bonds) {
      const p = pos[b.u];
      const q = pos[b.v];
      const dx = q.x - p.x;
      const dy = q.y - p.y;
      const dist = Math.hypot(dx, dy) || 1e-6;
      const f = 0.35 * (dist - BOND_LEN);
      force[b.u].x += (f * dx) / dist;
      force[b.u].y += (f * dy) / dist;
      force[b.v].x -= (f * dx) / dist;
      force[b.v].y -= (f * dy) / dist;
    }
    // short-range repulsion
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const dx = pos[j].x - pos[i].x;
        const dy = pos[j].y - pos[i].y;
        const d2 = dx * dx + dy * dy;
        if (d2 > 9 * BOND_LEN * BOND_LEN || d2 < 1e-9) continue;
        const d = Math.sqrt(d2);
        const f = 0.12 / d2;
        force[i].x -= (f * dx) / d;
        force[i].y -= (f * dy) / d;
        force[j].x += (f * dx) / d;
        force[j].y += (f * dy) / d;
      }
    }
    for (let i = 0; i < n; i++) {
      if (pinned[i]) continue;
      pos[i].x += Math.max(-0.2, Math.min(0.2, force[i].x));
      pos[i].y += Math.max(-0.2, Math.min(0.2, force[i].y));
    }
  }
}

/** Fit coordinates into a width x height viewport with padding. */
export function fitToViewport(points: Point[], width: number, height: number,
                              pad = 28): Point[] {
  if (!points.length) return [];
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-6);
  const spanY = Math.max(maxY - minY, 1e-6);
  const scale = Math.min((width - 2 * pad) / spanX,
                         (height - 2 * pad) / spanY, 60);
  const ox = (width - scale * (minX + maxX)) / 2;
  const oy = (height - scale * (minY + maxY)) / 2;
  return points.map((p) => ({ x: p.x * scale + ox, y: p.y * scale + oy }));
}
