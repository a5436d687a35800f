/** Application wiring: load a molecule, inspect PCA coloring, pick a cut,
 * edit condition bits, browse retrieved R-groups, apply re-attachments and
 * walk the branching history. */

import { ApiClient, LatestOnly } from "./api.js";
import type { BranchInfo, DecomposeResponse, ReattachCandidate,
              RetrieveResponse } from "./api.js";
import { renderMolecule } from "./render.js";
import { SessionModel, parseSessionFile, replaySession } from "./model.js";

const api = new ApiClient("");
const retrieveGate = new LatestOnly<RetrieveResponse>();

const state = {
  model: new SessionModel(),
  smiles: "",
  graph: null as DecomposeResponse | null,
  scores: null as number[] | null,
  coreIndex: 0,
  branch: null as BranchInfo | null,
  conditions: new Set<string>(),
  retrieval: [] as RetrieveResponse["results"],
  candidates: [] as ReattachCandidate[],
  patternNames: [] as string[],
  showColors: true,
};

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function setStatus(text: string, isError = false) {
  const box = el<HTMLDivElement>("status");
  box.textContent = text;
  box.className = isError ? "status error" : "status";
}

async function loadMolecule(smiles: string, record = true) {
  try {
    setStatus("parsing...");
    const parsed = await api.parse(smiles);
    const colored = parsed.graph.atoms.length >= 2
      ? await api.color(smiles) : null;
    state.smiles = parsed.smiles;
    state.scores = colored?.scores ?? null;
    state.graph = await api.decompose(smiles, 0);
    state.coreIndex = 0;
    state.branch = null;
    state.conditions = new Set();
    state.retrieval = [];
    state.candidates = [];
    state.model.load(parsed.smiles, parsed.descriptors);
    if (record) state.model.record({ type: "load", smiles });
    setStatus(`loaded ${parsed.smiles} (${parsed.graph.atoms.length} atoms)`);
    redraw();
  } catch (exc) {
    setStatus(String(exc), true);
  }
}

function selectCut(branchIndex: number, record = true) {
  if (!state.graph) return;
  const branch = state.graph.branches[branchIndex];
  if (!branch) return;
  state.branch = branch;
  state.conditions = new Set(branch.condition_names);
  state.retrieval = [];
  state.candidates = [];
  if (record) state.model.record({ type: "select_cut", branchIndex });
  redraw();
  void runRetrieve();
}

async function runRetrieve(record = true) {
  if (!state.branch) return;
  const names = [...state.conditions].sort();
  if (record) {
    state.model.record({ type: "set_conditions", names });
    state.model.record({ type: "retrieve", k: 12 });
  }
  try {
    const resp = await retrieveGate.run(() =>
      api.retrieve(state.branch!.query_smiles, state.branch!.stub_index,
                   names, 12));
    if (resp === null) return; // stale
    state.retrieval = resp.results;
    redraw();
  } catch (exc) {
    setStatus(String(exc), true);
  }
}

async function applyCandidate(key: string, record = true) {
  if (!state.branch) return;
  try {
    const resp = await api.reattach(state.branch.query_smiles,
                                    state.branch.stub_index, key,
                                    state.smiles);
    const best = resp.candidates[0];
    if (!best) {
      setStatus("no valid re-attachment for that R-group", true);
      return;
    }
    state.candidates = resp.candidates;
    state.model.apply(best.smiles, best.descriptors, key);
    if (record) state.model.record({ type: "apply", key });
    await reloadCurrent(best.smiles);
  } catch (exc) {
    setStatus(String(exc), true);
  }
}

async function reloadCurrent(smiles: string) {
  const parsed = await api.parse(smiles);
  const colored = parsed.graph.atoms.length >= 2
    ? await api.color(smiles) : null;
  state.smiles = parsed.smiles;
  state.scores = colored?.scores ?? null;
  state.graph = await api.decompose(smiles, 0);
  state.coreIndex = 0;
  state.branch = null;
  state.retrieval = [];
  setStatus(`applied; now at ${parsed.smiles}`);
  redraw();
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

function redraw() {
  drawMolecule();
  drawCorePicker();
  drawConditions();
  drawRetrieval();
  drawCandidates();
  drawHistory();
}

function drawMolecule() {
  const host = el<HTMLDivElement>("molecule");
  host.textContent = "";
  if (!state.graph) return;
  void api.parse(state.smiles).then((parsed) => {
    const cuts = state.graph!.branches.map((b) => b.cut);
    const svg = renderMolecule(parsed.graph, {
      width: host.clientWidth || 460,
      height: 340,
      scores: state.showColors ? state.scores : null,
      cuttable: cuts,
      selectedCut: state.branch?.cut ?? null,
      onBondClick: (u, v) => {
        const idx = state.graph!.branches.findIndex(
          (b) => (b.cut[0] === u && b.cut[1] === v) ||
                 (b.cut[0] === v && b.cut[1] === u));
        if (idx >= 0) selectCut(idx);
      },
    });
    host.appendChild(svg);
  });
}

function drawCorePicker() {
  const host = el<HTMLDivElement>("cores");
  host.textContent = "";
  if (!state.graph) return;
  state.graph.cores.forEach((core, i) => {
    const btn = document.createElement("button");
    btn.textContent = `${core.smiles} (${core.n_branches} branches)`;
    btn.className = i === state.coreIndex ? "core selected" : "core";
    btn.addEventListener("click", async () => {
      state.graph = await api.decompose(state.smiles, i);
      state.coreIndex = i;
      state.branch = null;
      state.retrieval = [];
      state.model.record({ type: "select_core", coreIndex: i });
      redraw();
    });
    host.appendChild(btn);
  });
}

function drawConditions() {
  const host = el<HTMLDivElement>("conditions");
  host.textContent = "";
  if (!state.branch) {
    host.textContent = "select a highlighted bond to choose a cut site";
    return;
  }
  const info = document.createElement("div");
  info.className = "cut-info";
  info.textContent = `cut -> R-group ${state.branch.rgroup_smiles}; ` +
    `template ${state.branch.query_smiles}`;
  host.appendChild(info);
  for (const name of state.patternNames) {
    const label = document.createElement("label");
    label.className = "bit";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = state.conditions.has(name);
    box.addEventListener("change", () => {
      if (box.checked) state.conditions.add(name);
      else state.conditions.delete(name);
      void runRetrieve();
    });
    label.appendChild(box);
    label.appendChild(document.createTextNode(name));
    host.appendChild(label);
  }
}

function drawRetrieval() {
  const host = el<HTMLDivElement>("retrieval");
  host.textContent = "";
  state.retrieval.forEach((row, rank) => {
    const item = document.createElement("div");
    item.className = "hit";
    const text = document.createElement("span");
    text.textContent = `${rank + 1}. ${row.smiles}  (${row.score.toFixed(3)})`;
    const apply = document.createElement("button");
    apply.textContent = "apply";
    apply.addEventListener("click", () => void applyCandidate(row.key));
    item.appendChild(text);
    item.appendChild(apply);
    host.appendChild(item);
  });
}

function drawCandidates() {
  const host = el<HTMLDivElement>("candidates");
  host.textContent = "";
  for (const cand of state.candidates) {
    const div = document.createElement("div");
    div.className = "candidate";
    const deltas = Object.entries(cand.descriptor_delta)
      .filter(([, [a, b]]) => a !== b)
      .map(([k, [a, b]]) => `${k}: ${a} -> ${b}`)
      .join(", ");
    div.textContent = `${cand.smiles}${deltas ? "  [" + deltas + "]" : ""}`;
    host.appendChild(div);
  }
}

function drawHistory() {
  const host = el<HTMLDivElement>("history");
  host.textContent = "";
  const model = state.model;
  if (model.rootId === null) return;
  const walk = (id: number, depth: number) => {
    const node = model.nodes.get(id)!;
    const row = document.createElement("div");
    row.className = id === model.currentId ? "node current" : "node";
    row.style.marginLeft = `${depth * 16}px`;
    row.textContent = (node.appliedKey ? `+ ${node.appliedKey}: ` : "") +
      node.smiles;
    row.addEventListener("click", () => {
      model.checkout(id);
      void reloadCurrent(node.smiles);
    });
    host.appendChild(row);
    for (const child of node.children) walk(child, depth + 1);
  };
  walk(model.rootId, 0);
}

// ---------------------------------------------------------------------------
// boot
// ---------------------------------------------------------------------------

async function boot() {
  const patterns = await api.patterns();
  state.patternNames = (patterns.patterns as { name: string;
    pattern_smiles: string | null }[])
    .filter((p) => p.pattern_smiles !== null)
    .map((p) => p.name);

  el<HTMLButtonElement>("load").addEventListener("click", () => {
    void loadMolecule(el<HTMLInputElement>("smiles").value.trim());
  });
  el<HTMLInputElement>("smiles").addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
      void loadMolecule(el<HTMLInputElement>("smiles").value.trim());
    }
  });
  el<HTMLInputElement>("show-colors").addEventListener("change", (ev) => {
    state.showColors = (ev.target as HTMLInputElement).checked;
    drawMolecule();
  });
  el<HTMLButtonElement>("export").addEventListener("click", () => {
    const blob = new Blob([JSON.stringify(state.model.exportSession(), null, 1)],
                          { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "session.json";
    a.click();
  });
  el<HTMLInputElement>("import").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      const session = parseSessionFile(await file.text());
      setStatus("replaying session...");
      const panels = await replaySession(api, session);
      const last = panels[panels.length - 1];
      if (last) await loadMolecule(last.molecule, false);
      setStatus(`replayed ${session.events.length} events`);
    } catch (exc) {
      setStatus(String(exc), true);
    }
  });
  setStatus("ready - load a molecule");
}

void boot();
