import type { StatePayload } from "./types.js";

export interface Snapshot {
  generation: number;
  front1: number;
  comparisons: number;
  model: string;
}

/** Accumulates state snapshots (one per generation) and renders the
 * progress chart: front-1 size and comparisons asked versus generation,
 * with a vertical marker where the model escalated. */
export class ProgressSeries {
  snapshots: Snapshot[] = [];
  escalationAt: number | null = null;

  add(state: StatePayload): void {
    const snap: Snapshot = {
      generation: state.generation,
      front1: state.front_sizes[0] ?? 0,
      comparisons: state.comparisons,
      model: state.model,
    };
    const last = this.snapshots[this.snapshots.length - 1];
    if (last && last.generation === snap.generation) {
      this.snapshots[this.snapshots.length - 1] = snap;
    } else {
      this.snapshots.push(snap);
    }
    if (this.escalationAt === null && state.model === "choquet") {
      this.escalationAt = state.generation;
    }
  }

  /** Comparisons counters never go backwards; exposed for sanity checks. */
  comparisonsMonotone(): boolean {
    for (let i = 1; i < this.snapshots.length; i++) {
      if (this.snapshots[i].comparisons < this.snapshots[i - 1].comparisons) return false;
    }
    return true;
  }

  svg(width = 480, height = 160): string {
    const snaps = this.snapshots;
    if (snaps.length === 0) return `<svg class="progress" width="${width}" height="${height}"></svg>`;
    const pad = 24;
    const maxGen = Math.max(snaps[snaps.length - 1].generation, 1);
    const maxFront = Math.max(...snaps.map((s) => s.front1), 1);
    const maxComp = Math.max(...snaps.map((s) => s.comparisons), 1);
    const px = (g: number) => pad + (g / maxGen) * (width - 2 * pad);
    const pyF = (v: number) => height - pad - (v / maxFront) * (height - 2 * pad);
    const pyC = (v: number) => height - pad - (v / maxComp) * (height - 2 * pad);

    const frontLine = snaps.map((s) => `${px(s.generation).toFixed(1)},${pyF(s.front1).toFixed(1)}`).join(" ");
    const compLine = snaps.map((s) => `${px(s.generation).toFixed(1)},${pyC(s.comparisons).toFixed(1)}`).join(" ");
    const parts = [
      `<svg class="progress" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" xmlns="http://www.w3.org/2000/svg">`,
      `<rect width="${width}" height="${height}" fill="#fff" stroke="#ddd"/>`,
      `<polyline class="series-front" points="${frontLine}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>`,
      `<polyline class="series-comparisons" points="${compLine}" fill="none" stroke="#2ca02c" stroke-width="1.5"/>`,
    ];
    if (this.escalationAt !== null) {
      const x = px(this.escalationAt).toFixed(1);
      parts.push(
        `<line class="escalation-marker" x1="${x}" y1="${pad}" x2="${x}" y2="${height - pad}" stroke="#d62728" stroke-width="1.5" stroke-dasharray="5 3"/>`,
      );
      parts.push(
        `<text x="${x}" y="${pad - 6}" font-size="10" fill="#d62728" text-anchor="middle">CHOQUET</text>`,
      );
    }
    parts.push(
      `<text x="${pad}" y="${height - 6}" font-size="10" fill="#1f77b4">front-1 size</text>`,
      `<text x="${width / 2}" y="${height - 6}" font-size="10" fill="#2ca02c">comparisons asked</text>`,
      `</svg>`,
    );
    return parts.join("");
  }
}
