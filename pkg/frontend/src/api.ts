/** Typed client over the chemistry API. The UI never computes chemistry
 * itself: every displayed fact round-trips through these calls. */

export interface AtomJson {
  atomic_number: number | null;
  formal_charge: number | null;
  chirality_tag: number | null;
  hybridization: number | null;
  num_explicit_hs: number | null;
  aromaticity: boolean | null;
  is_stub: boolean;
}

export interface BondJson {
  u: number;
  v: number;
  bond_type: number | null;
  bond_direction: number | null;
  bond_stereochemistry: number | null;
  conjugation: boolean | null;
  aromaticity: boolean | null;
}

export interface GraphJson {
  atoms: AtomJson[];
  bonds: BondJson[];
}

export interface ParseResponse {
  graph: GraphJson;
  smiles: string;
  canonical_key: string;
  descriptors: Record<string, number>;
  stub_indices: number[];
}

export interface ColorResponse {
  graph: GraphJson;
  scores: number[];
  converged: boolean;
}

export interface BranchInfo {
  branch_index: number;
  cut: [number, number];
  rgroup_smiles: string;
  rgroup_key: string;
  query_smiles: string;
  stub_index: number;
  condition_names: string[];
  condition_bits: string;
}

export interface DecomposeResponse {
  cores: { smiles: string; atom_indices: number[]; n_branches: number }[];
  core_index: number;
  branches: BranchInfo[];
}

export interface RetrieveResult {
  key: string;
  smiles: string;
  score: number;
}

export interface RetrieveResponse {
  results: RetrieveResult[];
  condition_bits: string;
  k: number;
}

export interface ReattachCandidate {
  smiles: string;
  canonical_key: string;
  bond_type: number | null;
  valid: boolean;
  descriptors: Record<string, number>;
  descriptor_delta: Record<string, [number, number]>;
}

export interface ReattachResponse {
  candidates: ReattachCandidate[];
}

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

export class ApiClient {
  constructor(private base: string = "") {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const data = await resp.json();
    if (!resp.ok) {
      const err = data?.error ?? { code: "unknown", message: resp.statusText };
      throw new ApiError(err.code, err.message, resp.status);
    }
    return data as T;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    const data = await resp.json();
    if (!resp.ok) {
      const err = data?.error ?? { code: "unknown", message: resp.statusText };
      throw new ApiError(err.code, err.message, resp.status);
    }
    return data as T;
  }

  parse(smiles: string): Promise<ParseResponse> {
    return this.post("/parse", { smiles });
  }

  color(smiles: string): Promise<ColorResponse> {
    return this.post("/color", { smiles });
  }

  decompose(smiles: string, coreIndex = 0): Promise<DecomposeResponse> {
    return this.post("/decompose", { smiles, core_index: coreIndex });
  }

  retrieve(templateSmiles: string, stubIndex: number, condition: string[],
           k: number): Promise<RetrieveResponse> {
    return this.post("/retrieve", {
      template_smiles: templateSmiles,
      stub_index: stubIndex,
      condition,
      k,
    });
  }

  reattach(templateSmiles: string, stubIndex: number, rgroupKey: string,
           originalSmiles?: string): Promise<ReattachResponse> {
    return this.post("/reattach", {
      template_smiles: templateSmiles,
      stub_index: stubIndex,
      rgroup_key: rgroupKey,
      original_smiles: originalSmiles,
    });
  }

  patterns(): Promise<{ registry_version: number; patterns: unknown[] }> {
    return this.get("/patterns");
  }

  libraryMeta(): Promise<Record<string, unknown>> {
    return this.get("/library/meta");
  }
}

/** Drops responses that arrive after a newer request was issued. */
export class LatestOnly<T> {
  private seq = 0;
  private applied = 0;

  async run(task: () => Promise<T>): Promise<T | null> {
    const mine = ++this.seq;
    const result = await task();
    if (mine < this.applied) return null;
    this.applied = mine;
    return result;
  }
}
