import type { InstanceDoc, ObjectiveKey, QueryPayload, SolutionCard } from "./types.js";

// Orientation arrows: down = minimized (lower is better), up = maximized.
export const OBJECTIVE_LABELS: Array<{ key: ObjectiveKey; arrow: string; name: string }> = [
  { key: "f1", arrow: "↓", name: "mean distance" },
  { key: "f2", arrow: "↓", name: "worst distance" },
  { key: "f3", arrow: "↑", name: "covered pop (near)" },
  { key: "f4", arrow: "↑", name: "covered pop (far)" },
  { key: "f5", arrow: "↓", name: "distance variance" },
];

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface MapGeometry {
  minX: number;
  minY: number;
  span: number;
}

export function mapGeometry(instance: InstanceDoc): MapGeometry {
  const xs = [...instance.demand.map((d) => d.x), ...instance.sites.map((s) => s.x)];
  const ys = [...instance.demand.map((d) => d.y), ...instance.sites.map((s) => s.y)];
  const minX = Math.min(...xs);
  const minY = Math.min(...ys);
  const span = Math.max(Math.max(...xs) - minX, Math.max(...ys) - minY, 1e-9);
  return { minX, minY, span };
}

/** SVG map of one candidate layout: demand sized by population, candidate
 * sites faint, selected facilities highlighted with both covering radii. */
export function mapSvg(instance: InstanceDoc, card: SolutionCard, size = 240): string {
  const geo = mapGeometry(instance);
  const pad = 0.08 * size;
  const scale = (size - 2 * pad) / geo.span;
  const px = (x: number) => pad + (x - geo.minX) * scale;
  const py = (y: number) => size - pad - (y - geo.minY) * scale;

  const maxPop = Math.max(...instance.demand.map((d) => d.pop), 1);
  const parts: string[] = [];
  parts.push(
    `<svg class="map" viewBox="0 0 ${size} ${size}" width="${size}" height="${size}" xmlns="http://www.w3.org/2000/svg">`,
  );
  parts.push(`<rect width="${size}" height="${size}" fill="#fafafa" stroke="#ddd"/>`);

  const selected = new Set(card.sites);
  for (const [sx, sy] of card.coords) {
    parts.push(
      `<circle class="radius-s1" cx="${px(sx).toFixed(1)}" cy="${py(sy).toFixed(1)}" r="${(instance.s1 * scale).toFixed(1)}" fill="rgba(214,39,40,0.08)" stroke="#d62728" stroke-width="0.8"/>`,
    );
    parts.push(
      `<circle class="radius-s2" cx="${px(sx).toFixed(1)}" cy="${py(sy).toFixed(1)}" r="${(instance.s2 * scale).toFixed(1)}" fill="none" stroke="#d62728" stroke-width="0.8" stroke-dasharray="4 3"/>`,
    );
  }
  for (const d of instance.demand) {
    const r = 1.5 + 4.5 * Math.sqrt(d.pop / maxPop);
    parts.push(
      `<circle class="demand" cx="${px(d.x).toFixed(1)}" cy="${py(d.y).toFixed(1)}" r="${r.toFixed(1)}" fill="rgba(31,119,180,0.45)"><title>demand ${d.id}: pop ${d.pop}</title></circle>`,
    );
  }
  for (const s of instance.sites) {
    if (selected.has(s.id)) continue;
    parts.push(
      `<rect class="site" x="${(px(s.x) - 2.5).toFixed(1)}" y="${(py(s.y) - 2.5).toFixed(1)}" width="5" height="5" fill="#bbb"><title>site ${s.id}</title></rect>`,
    );
  }
  for (const id of card.sites) {
    const s = instance.sites[id - 1];
    parts.push(
      `<circle class="facility" cx="${px(s.x).toFixed(1)}" cy="${py(s.y).toFixed(1)}" r="6" fill="#d62728" stroke="#7f1d1d" stroke-width="1.5"><title>facility ${id}</title></circle>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Horizontal bars of the five normalized cost values (0 = ideal, shared
 * [0, 1] scale across cards); raw values appear on hover. */
export function objectiveBars(card: SolutionCard, width = 240): string {
  const rowH = 22;
  const labelW = 52;
  const height = rowH * OBJECTIVE_LABELS.length;
  const parts: string[] = [];
  parts.push(
    `<svg class="bars" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" xmlns="http://www.w3.org/2000/svg">`,
  );
  OBJECTIVE_LABELS.forEach((obj, k) => {
    const y = k * rowH;
    const value = card.normalized[k];
    const raw = card.objectives[obj.key];
    const barW = Math.max(0, Math.min(1, value)) * (width - labelW - 8);
    parts.push(`<text x="4" y="${y + 15}" font-size="11" fill="#333">${obj.key} ${obj.arrow}</text>`);
    parts.push(
      `<rect class="bar bar-${obj.key}" x="${labelW}" y="${y + 4}" width="${barW.toFixed(1)}" height="${rowH - 9}" fill="#1f77b4"><title>${escapeXml(`${obj.name}: raw ${raw}, normalized cost ${value.toFixed(4)}`)}</title></rect>`,
    );
    parts.push(
      `<rect x="${labelW}" y="${y + 4}" width="${width - labelW - 8}" height="${rowH - 9}" fill="none" stroke="#ccc"/>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

/** One layout card: map above bars, with the site list as a caption. */
export function layoutCard(instance: InstanceDoc, card: SolutionCard, title: string): string {
  return [
    `<div class="card">`,
    `<h3>${escapeXml(title)}</h3>`,
    `<p class="sites">sites: ${card.sites.join(", ")}</p>`,
    mapSvg(instance, card),
    objectiveBars(card),
    `</div>`,
  ].join("");
}

/** The full query view: two cards plus the generation and model badges. */
export function queryView(instance: InstanceDoc, query: QueryPayload): string {
  if (!query.pending || !query.left || !query.right) {
    return `<p class="idle">no pending question</p>`;
  }
  const badge = (query.model ?? "linear").toUpperCase();
  return [
    `<div class="query-meta">generation ${query.generation} <span class="badge badge-${query.model}">${badge}</span></div>`,
    `<div class="query-cards">`,
    layoutCard(instance, query.left, "Layout A"),
    layoutCard(instance, query.right, "Layout B"),
    `</div>`,
  ].join("");
}
