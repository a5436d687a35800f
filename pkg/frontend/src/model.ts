/** View model: session history tree and deterministic replay.
 *
 * All state derives from API responses plus user toggles. The history is a
 * tree: applying a re-attachment candidate branches a new node under the
 * current one; ancestors are never mutated. An exported session is the
 * event log; replaying it against the same server reproduces the same
 * panels because every endpoint is idempotent.
 */

import type { ApiClient, BranchInfo, DecomposeResponse, RetrieveResult } from "./api.js";

export const SESSION_FORMAT_VERSION = 1;

export type SessionEvent =
  | { type: "load"; smiles: string }
  | { type: "select_core"; coreIndex: number }
  | { type: "select_cut"; branchIndex: number }
  | { type: "set_conditions"; names: string[] }
  | { type: "retrieve"; k: number }
  | { type: "apply"; key: string };

export interface HistoryNode {
  id: number;
  parentId: number | null;
  smiles: string;
  descriptors: Record<string, number>;
  appliedKey: string | null;
  children: number[];
}

export interface PanelState {
  molecule: string;
  coreIndex: number;
  branch: BranchInfo | null;
  conditions: string[];
  retrieval: { key: string; score: number }[];
  historySize: number;
  currentNode: number;
}

export interface SessionFile {
  version: number;
  events: SessionEvent[];
}

export class SessionModel {
  nodes = new Map<number, HistoryNode>();
  rootId: number | null = null;
  currentId: number | null = null;
  private nextId = 0;
  events: SessionEvent[] = [];

  get current(): HistoryNode | null {
    return this.currentId === null ? null
      : this.nodes.get(this.currentId) ?? null;
  }

  load(smiles: string, descriptors: Record<string, number>): HistoryNode {
    const node: HistoryNode = {
      id: this.nextId++, parentId: null, smiles, descriptors,
      appliedKey: null, children: [],
    };
    this.nodes.set(node.id, node);
    this.rootId = node.id;
    this.currentId = node.id;
    return node;
  }

  /** Applying a candidate appends one child under the current node. The
   * parent node is never modified beyond its child list. */
  apply(smiles: string, descriptors: Record<string, number>,
        key: string): HistoryNode {
    if (this.currentId === null) throw new Error("no molecule loaded");
    const node: HistoryNode = {
      id: this.nextId++, parentId: this.currentId, smiles, descriptors,
      appliedKey: key, children: [],
    };
    this.nodes.set(node.id, node);
    this.nodes.get(this.currentId)!.children.push(node.id);
    this.currentId = node.id;
    return node;
  }

  checkout(id: number): void {
    if (!this.nodes.has(id)) throw new Error(`no history node ${id}`);
    this.currentId = id;
  }

  record(event: SessionEvent): void {
    this.events.push(event);
  }

  exportSession(): SessionFile {
    return { version: SESSION_FORMAT_VERSION, events: [...this.events] };
  }

  /** Descriptor deltas along the path from the root to a node. */
  lineageDeltas(id: number): { key: string; before: number; after: number }[][] {
    const chain: HistoryNode[] = [];
    let cur = this.nodes.get(id) ?? null;
    while (cur) {
      chain.unshift(cur);
      cur = cur.parentId === null ? null : this.nodes.get(cur.parentId) ?? null;
    }
    const out: { key: string; before: number; after: number }[][] = [];
    for (let i = 1; i < chain.length; i++) {
      const prev = chain[i - 1].descriptors;
      const next = chain[i].descriptors;
      out.push(Object.keys(prev).map((k) => ({
        key: k, before: prev[k], after: next[k],
      })));
    }
    return out;
  }
}

export function parseSessionFile(text: string): SessionFile {
  const obj = JSON.parse(text);
  if (obj?.version !== SESSION_FORMAT_VERSION || !Array.isArray(obj.events)) {
    throw new Error("unsupported session file");
  }
  return obj as SessionFile;
}

/** Replay an event log against a live server; returns the panel state after
 * every event. Two replays of the same file against the same artifacts are
 * identical (the API is idempotent and the derivation below is pure). */
export async function replaySession(api: ApiClient, file: SessionFile,
                                    retrievalK = 5): Promise<PanelState[]> {
  const model = new SessionModel();
  let molecule = "";
  let coreIndex = 0;
  let decomposition: DecomposeResponse | null = null;
  let branch: BranchInfo | null = null;
  let conditions: string[] = [];
  let retrieval: RetrieveResult[] = [];
  const panels: PanelState[] = [];

  for (const event of file.events) {
    switch (event.type) {
      case "load": {
        const parsed = await api.parse(event.smiles);
        molecule = parsed.smiles;
        model.load(parsed.smiles, parsed.descriptors);
        decomposition = await api.decompose(event.smiles, 0);
        coreIndex = 0;
        branch = null;
        conditions = [];
        retrieval = [];
        break;
      }
      case "select_core": {
        decomposition = await api.decompose(molecule, event.coreIndex);
        coreIndex = event.coreIndex;
        branch = null;
        retrieval = [];
        break;
      }
      case "select_cut": {
        if (!decomposition) throw new Error("select_cut before load");
        branch = decomposition.branches[event.branchIndex] ?? null;
        conditions = branch ? [...branch.condition_names] : [];
        retrieval = [];
        break;
      }
      case "set_conditions": {
        conditions = [...event.names];
        break;
      }
      case "retrieve": {
        if (!branch) throw new Error("retrieve before select_cut");
        const resp = await api.retrieve(branch.query_smiles,
                                        branch.stub_index, conditions,
                                        event.k ?? retrievalK);
        retrieval = resp.results;
        break;
      }
      case "apply": {
        if (!branch) throw new Error("apply before select_cut");
        const resp = await api.reattach(branch.query_smiles,
                                        branch.stub_index, event.key,
                                        molecule);
        const best = resp.candidates[0];
        if (best) {
          model.apply(best.smiles, best.descriptors, event.key);
          molecule = best.smiles;
          decomposition = await api.decompose(molecule, 0);
          coreIndex = 0;
          branch = null;
          retrieval = [];
        }
        break;
      }
    }
    panels.push({
      molecule,
      coreIndex,
      branch: branch ? { ...branch } : null,
      conditions: [...conditions],
      retrieval: stripScores(retrieval),
      historySize: model.nodes.size,
      currentNode: model.currentId ?? -1,
    });
  }
  return panels;
}

function stripScores(rows: RetrieveResult[]): { key: string; score: number }[] {
  return rows.map((r) => ({ key: r.key, score: r.score }));
}
