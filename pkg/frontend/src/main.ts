import { ApiClient } from "./api.js";
import { SessionFlow } from "./flow.js";
import { ProgressSeries } from "./progress.js";
import { layoutCard, queryView } from "./render.js";
import type { InstanceDoc, QueryPayload, ResultPayload, Verdict } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const api = new ApiClient("");
let flow: SessionFlow | null = null;
let instance: InstanceDoc | null = null;
let progress = new ProgressSeries();

function setButtonsEnabled(enabled: boolean): void {
  for (const id of ["btn-left", "btn-right", "btn-indifferent"]) {
    ($(id) as HTMLButtonElement).disabled = !enabled;
  }
}

function banner(message: string): void {
  const el = $("banner");
  el.innerHTML = `<span>${message}</span> <button id="banner-close">dismiss</button>`;
  el.classList.remove("hidden");
  $("banner-close").onclick = () => el.classList.add("hidden");
}

function showQuery(query: QueryPayload): void {
  if (!instance) return;
  $("query-panel").innerHTML = queryView(instance, query);
  setButtonsEnabled(true);
}

function showResult(result: ResultPayload): void {
  setButtonsEnabled(false);
  const best = instance && result.best_solution
    ? `<p>best layout: sites ${result.best_solution.join(", ")} after ${result.generations_used} generations, ${result.comparisons_asked} answers</p>`
    : "";
  const history = result.history
    .map(
      (h) =>
        `<li>g${h.generation}: {${h.left.join(",")}} vs {${h.right.join(",")}} &rarr; ${h.verdict}</li>`,
    )
    .join("");
  $("query-panel").innerHTML = `<div class="result"><h3>finished${result.converged ? " (optimum found)" : ""}</h3>${best}<ol class="history">${history}</ol></div>`;
}

async function answer(verdict: Verdict): Promise<void> {
  if (!flow) return;
  setButtonsEnabled(false);
  await flow.answer(verdict);
}

async function startSession(): Promise<void> {
  const payload = {
    generator: {
      q: Number(($("form-q") as HTMLInputElement).value),
      m: Number(($("form-m") as HTMLInputElement).value),
      seed: Number(($("form-gen-seed") as HTMLInputElement).value),
    },
    instance: null as InstanceDoc | null,
    p: Number(($("form-p") as HTMLInputElement).value),
    seed: Number(($("form-seed") as HTMLInputElement).value),
    interaction_period: Number(($("form-period") as HTMLInputElement).value),
    pop_size: Number(($("form-pop") as HTMLInputElement).value),
    max_generations: Number(($("form-gens") as HTMLInputElement).value),
  };
  const pasted = ($("form-instance") as HTMLTextAreaElement).value.trim();
  if (pasted) {
    try {
      payload.instance = JSON.parse(pasted) as InstanceDoc;
      (payload as { generator: unknown }).generator = null;
    } catch {
      banner("instance JSON does not parse");
      return;
    }
  }
  try {
    const info = await api.createSession(payload);
    instance = info.instance;
    progress = new ProgressSeries();
    $("session-id").textContent = info.id;
    flow?.stop();
    flow = new SessionFlow(api, info.id, {
      onQuery: showQuery,
      onState: (state) => {
        progress.add(state);
        $("progress-panel").innerHTML = progress.svg();
        $("status-line").textContent =
          `${state.state} | generation ${state.generation} | model ${state.model} | answers ${state.comparisons}`;
        if (state.best && instance) {
          $("best-panel").innerHTML = layoutCard(instance, state.best, "current best");
        }
      },
      onFinished: showResult,
      onError: banner,
    });
    void flow.run();
  } catch (err) {
    banner(err instanceof Error ? err.message : String(err));
  }
}

export function bootstrap(): void {
  $("btn-start").onclick = () => void startSession();
  $("btn-left").onclick = () => void answer("left");
  $("btn-right").onclick = () => void answer("right");
  $("btn-indifferent").onclick = () => void answer("indifferent");
  setButtonsEnabled(false);
}

if (typeof document !== "undefined" && document.getElementById("btn-start")) {
  bootstrap();
}
