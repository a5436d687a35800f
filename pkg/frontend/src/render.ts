/** SVG molecule drawing: atoms colored by PCA score, cuttable bonds
 * highlighted and clickable. */

import type { GraphJson } from "./api.js";
import { divergingColor } from "./color.js";
import { bondKey, fitToViewport, layoutMolecule } from "./layout.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const ELEMENTS: Record<number, string> = {
  1: "H", 5: "B", 6: "C", 7: "N", 8: "O", 9: "F", 14: "Si", 15: "P",
  16: "S", 17: "Cl", 35: "Br", 53: "I",
};

export interface RenderOptions {
  width: number;
  height: number;
  scores?: number[] | null;
  cuttable?: [number, number][];
  selectedCut?: [number, number] | null;
  onBondClick?: (u: number, v: number) => void;
}

export function renderMolecule(graph: GraphJson, opts: RenderOptions): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(opts.width));
  svg.setAttribute("height", String(opts.height));
  svg.setAttribute("viewBox", `0 0 ${opts.width} ${opts.height}`);
  svg.classList.add("molecule");

  const pos = fitToViewport(layoutMolecule(graph), opts.width, opts.height);
  const cuttable = new Set((opts.cuttable ?? []).map(([u, v]) => bondKey(u, v)));
  const selected = opts.selectedCut ? bondKey(...opts.selectedCut) : null;

  for (const b of graph.bonds) {
    const p = pos[b.u];
    const q = pos[b.v];
    const group = document.createElementNS(SVG_NS, "g");
    const key = bondKey(b.u, b.v);
    const masked = b.bond_type === null;
    const order = b.bond_type === 1 ? 2 : b.bond_type === 2 ? 3 : 1;
    const offsets = order === 1 ? [0] : order === 2 ? [-2.2, 2.2]
      : [-4, 0, 4];
    const dx = q.x - p.x;
    const dy = q.y - p.y;
    const len = Math.hypot(dx, dy) || 1;
    const nx = -dy / len;
    const ny = dx / len;
    for (const off of offsets) {
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(p.x + nx * off));
      line.setAttribute("y1", String(p.y + ny * off));
      line.setAttribute("x2", String(q.x + nx * off));
      line.setAttribute("y2", String(q.y + ny * off));
      line.setAttribute("stroke", key === selected ? "#e07b00" : "#444");
      line.setAttribute("stroke-width", key === selected ? "4" : "2");
      if (masked) line.setAttribute("stroke-dasharray", "5,4");
      if (b.aromaticity && off !== 0) line.setAttribute("stroke-dasharray", "3,3");
      group.appendChild(line);
    }
    if (cuttable.has(key)) {
      group.classList.add("cuttable");
      const hit = document.createElementNS(SVG_NS, "line");
      hit.setAttribute("x1", String(p.x));
      hit.setAttribute("y1", String(p.y));
      hit.setAttribute("x2", String(q.x));
      hit.setAttribute("y2", String(q.y));
      hit.setAttribute("stroke", "rgba(224,123,0,0.25)");
      hit.setAttribute("stroke-width", "12");
      hit.style.cursor = "pointer";
      hit.addEventListener("click", () => opts.onBondClick?.(b.u, b.v));
      group.appendChild(hit);
    }
    svg.appendChild(group);
  }

  const maxAbs = opts.scores?.length
    ? Math.max(...opts.scores.map((s) => Math.abs(s)), 1e-12) : 0;
  graph.atoms.forEach((atom, i) => {
    const p = pos[i];
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(p.x));
    circle.setAttribute("cy", String(p.y));
    circle.setAttribute("r", "11");
    const fill = opts.scores?.length
      ? divergingColor(opts.scores[i], maxAbs)
      : atom.is_stub ? "#f3e8ff" : "#f7f7f7";
    circle.setAttribute("fill", fill);
    circle.setAttribute("stroke", atom.is_stub ? "#9333ea" : "#555");
    if (atom.is_stub) circle.setAttribute("stroke-dasharray", "3,2");
    svg.appendChild(circle);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(p.x));
    label.setAttribute("y", String(p.y + 4));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("font-size", "11");
    label.textContent = atom.is_stub ? "*"
      : ELEMENTS[atom.atomic_number ?? 0] ?? `#${atom.atomic_number}`;
    svg.appendChild(label);
  });
  return svg;
}
