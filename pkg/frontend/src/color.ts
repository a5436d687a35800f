/** Diverging blue-white-red scale for PCA node scores. */

export function divergingColor(score: number, maxAbs: number): string {
  if (!isFinite(score) || maxAbs <= 0) return "rgb(245,245,245)";
  const t = Math.max(-1, Math.min(1, score / maxAbs));
  const blend = (a: number, b: number, f: number) => Math.round(a + (b - a) * f);
  if (t < 0) {
    const f = -t;
    return `rgb(${blend(245, 59, f)},${blend(245, 108, f)},${blend(245, 191, f)})`;
  }
  const f = t;
  return `rgb(${blend(245, 214, f)},${blend(245, 69, f)},${blend(245, 65, f)})`;
}

/** Count sign clusters: contiguous runs of same-signed scores over the
 * molecular graph (used to sanity-check regional consistency). */
export function signClusters(scores: number[],
                             bonds: { u: number; v: number }[]): number {
  const n = scores.length;
  if (n === 0) return 0;
  const sign = scores.map((s) => (s >= 0 ? 1 : -1));
  const adj: number[][] = Array.from({ length: n }, () => []);
  for (const b of bonds) {
    if (sign[b.u] === sign[b.v]) {
      adj[b.u].push(b.v);
      adj[b.v].push(b.u);
    }
  }
  const seen = new Array(n).fill(false);
  let clusters = 0;
  for (let s = 0; s < n; s++) {
    if (seen[s]) continue;
    clusters++;
    const stack = [s];
    seen[s] = true;
    while (stack.length) {
      const i = stack.pop()!;
      for (const j of adj[i]) {
        if (!seen[j]) {
          seen[j] = true;
          stack.push(j);
        }
      }
    }
  }
  return clusters;
}
