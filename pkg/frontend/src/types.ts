// Wire types mirroring the session service JSON payloads.

export interface DemandPointDoc {
  id: number;
  x: number;
  y: number;
  pop: number;
}

export interface SiteDoc {
  id: number;
  x: number;
  y: number;
}

export interface InstanceDoc {
  demand: DemandPointDoc[];
  sites: SiteDoc[];
  s1: number;
  s2: number;
  bounds?: Record<string, { min: number; max: number }>;
}

export type ObjectiveKey = "f1" | "f2" | "f3" | "f4" | "f5";

export interface SolutionCard {
  sites: number[];
  coords: [number, number][];
  objectives: Record<ObjectiveKey, number>;
  normalized: number[];
}

export interface QueryPayload {
  pending: boolean;
  query_id?: string;
  generation?: number;
  model?: string;
  left?: SolutionCard;
  right?: SolutionCard;
  state?: string;
  result?: string;
}

export interface StatePayload {
  state: string;
  generation: number;
  model: string;
  comparisons: number;
  escalations: number;
  repairs: number;
  fronts: SolutionCard[][];
  front_sizes: number[];
  best: SolutionCard | null;
  error: string | null;
}

export interface SessionInfo {
  id: string;
  instance: InstanceDoc;
  p: number;
  seed: number;
  interaction_period: number;
  pop_size: number;
  max_generations: number;
}

export interface HistoryEntry {
  seq: number;
  query_id: string;
  generation: number;
  left: number[];
  right: number[];
  verdict: string;
}

export interface ResultPayload {
  algorithm: string;
  converged: boolean;
  generations_used: number;
  comparisons_asked: number;
  best_solution: number[];
  history: HistoryEntry[];
  [key: string]: unknown;
}

export type Verdict = "left" | "right" | "indifferent";
