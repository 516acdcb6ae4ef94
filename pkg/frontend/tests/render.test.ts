import { describe, expect, it } from "vitest";

import { layoutCard, mapGeometry, mapSvg, objectiveBars, queryView } from "../src/render.js";
import type { InstanceDoc, QueryPayload, SolutionCard } from "../src/types.js";

const instance: InstanceDoc = {
  demand: [
    { id: 1, x: 0, y: 0, pop: 10 },
    { id: 2, x: 10, y: 0, pop: 40 },
    { id: 3, x: 0, y: 10, pop: 5 },
  ],
  sites: [
    { id: 1, x: 1, y: 1 },
    { id: 2, x: 9, y: 1 },
    { id: 3, x: 5, y: 9 },
  ],
  s1: 2,
  s2: 4,
};

const card: SolutionCard = {
  sites: [1, 3],
  coords: [
    [1, 1],
    [5, 9],
  ],
  objectives: { f1: 3.2, f2: 7.5, f3: 45, f4: 55, f5: 4.1 },
  normalized: [0.25, 0.5, 0.1, 0.0, 1.0],
};

const query: QueryPayload = {
  pending: true,
  query_id: "g12",
  generation: 12,
  model: "linear",
  left: card,
  right: { ...card, sites: [2, 3], coords: [[9, 1], [5, 9]] },
};

describe("mapSvg", () => {
  it("draws every demand point, candidate site, and selected facility", () => {
    const svg = mapSvg(instance, card);
    expect(svg.match(/class="demand"/g)).toHaveLength(3);
    // unselected candidates are faint squares; selected ones become facilities
    expect(svg.match(/class="site"/g)).toHaveLength(1);
    expect(svg.match(/class="facility"/g)).toHaveLength(2);
  });

  it("draws both covering radii per facility", () => {
    const svg = mapSvg(instance, card);
    expect(svg.match(/class="radius-s1"/g)).toHaveLength(2);
    expect(svg.match(/class="radius-s2"/g)).toHaveLength(2);
  });

  it("spans the instance extent", () => {
    const geo = mapGeometry(instance);
    expect(geo.minX).toBe(0);
    expect(geo.span).toBe(10);
  });
});

describe("objectiveBars", () => {
  it("renders five labelled bars with orientation arrows", () => {
    const svg = objectiveBars(card);
    expect(svg.match(/class="bar /g)).toHaveLength(5);
    expect(svg).toContain("f1 ↓");
    expect(svg).toContain("f3 ↑");
  });

  it("shows service-provided raw values on hover without recomputing", () => {
    const svg = objectiveBars(card);
    expect(svg).toContain("raw 3.2");
    expect(svg).toContain("raw 55");
  });

  it("bar widths follow the shared normalized scale", () => {
    const svg = objectiveBars(card, 252);
    // width - label - margin = 192; nf = 1.0 fills it, nf = 0 collapses
    expect(svg).toContain('width="192.0"');
    expect(svg).toContain('width="0.0"');
  });
});

describe("queryView", () => {
  it("renders exactly two cards and the model badge", () => {
    const html = queryView(instance, query);
    expect(html.match(/class="card"/g)).toHaveLength(2);
    expect(html).toContain("LINEAR");
    expect(html).toContain("generation 12");
  });

  it("renders an idle marker when nothing is pending", () => {
    const html = queryView(instance, { pending: false });
    expect(html).toContain("no pending question");
  });

  it("layout card lists the selected sites", () => {
    const html = layoutCard(instance, card, "Layout A");
    expect(html).toContain("sites: 1, 3");
  });
});
