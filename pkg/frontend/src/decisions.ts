// Plan decision panel. State shown here always comes from a server
// response: the panel re-renders only after the POST resolves, never from
// the form's own contents.

import { riskBadge } from "./badges";
import type {
  DecisionDto,
  DecisionRequest,
  DecisionResponse,
  PlanRecordDto,
} from "./types";

export interface PlanView {
  plan: PlanRecordDto["plan"];
  status: string;
  active: string[];
  history: string[][];
  decisions: DecisionDto[] | number;
}

export function fromRecord(rec: PlanRecordDto): PlanView {
  return {
    plan: rec.plan,
    status: rec.status,
    active: rec.activeStrategies,
    history: rec.history,
    decisions: rec.decisions,
  };
}

export function fromResponse(resp: DecisionResponse): PlanView {
  return {
    plan: resp.plan,
    status: resp.status,
    active: resp.active,
    history: resp.history,
    decisions: resp.decisions,
  };
}

export interface PanelOptions {
  snapshot: string;
  submit: (planId: string, req: DecisionRequest) => Promise<DecisionResponse>;
}

const FINAL_STATUSES = new Set(["Approved", "Personalized", "Overridden"]);

function strategyName(view: PlanView, id: string): string {
  const hit = view.plan.strategies.find((s) => s.id === id);
  return hit ? hit.name : id;
}

function strategyOptions(view: PlanView): string[] {
  const ids: string[] = [];
  for (const s of view.plan.strategies) ids.push(s.id);
  for (const id of view.active) if (!ids.includes(id)) ids.push(id);
  return ids;
}

function historyBlock(view: PlanView): HTMLElement {
  const details = document.createElement("details");
  details.className = "history";
  const summary = document.createElement("summary");
  summary.textContent = `History (${view.history.length} superseded)`;
  details.append(summary);
  const ul = document.createElement("ul");
  for (const past of view.history) {
    const li = document.createElement("li");
    li.textContent = past.map((id) => strategyName(view, id)).join(", ");
    ul.append(li);
  }
  details.append(ul);
  if (Array.isArray(view.decisions) && view.decisions.length > 0) {
    const h = document.createElement("p");
    h.textContent = "Decisions:";
    const log = document.createElement("ul");
    log.className = "decision-log";
    for (const d of view.decisions) {
      const li = document.createElement("li");
      const when = new Date(d.timestamp * 1000).toISOString();
      li.textContent = `${d.action} by ${d.actor} at ${when}`;
      log.append(li);
    }
    details.append(h, log);
  } else if (typeof view.decisions === "number") {
    const p = document.createElement("p");
    p.textContent = `${view.decisions} decision(s) recorded.`;
    details.append(p);
  }
  return details;
}

/** Render a plan panel into `container`, replacing its contents. */
export function renderPlanPanel(
  container: HTMLElement,
  view: PlanView,
  opts: PanelOptions,
): void {
  container.replaceChildren();
  container.classList.add("plan-panel");
  container.dataset.planId = view.plan.planID;
  container.dataset.status = view.status;

  const header = document.createElement("header");
  const title = document.createElement("strong");
  title.textContent = view.plan.planID;
  const chip = document.createElement("span");
  chip.className = `chip status-${view.status}`;
  chip.textContent = view.status;
  const timing = document.createElement("span");
  timing.className = "timing";
  timing.textContent = view.plan.timing;
  header.append(riskBadge(view.plan.riskLevel), title, chip, timing);
  container.append(header);

  const rationale = document.createElement("p");
  rationale.className = "rationale";
  rationale.textContent = view.plan.rationale;
  container.append(rationale);

  const list = document.createElement("div");
  list.className = "strategies";
  for (const id of strategyOptions(view)) {
    const label = document.createElement("label");
    label.className = "strategy";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = id;
    box.checked = view.active.includes(id);
    const text = document.createElement("span");
    text.textContent = strategyName(view, id);
    label.append(box, text);
    list.append(label);
  }
  container.append(list);

  const actions = document.createElement("div");
  actions.className = "actions";
  const actor = document.createElement("input");
  actor.type = "text";
  actor.className = "actor";
  actor.placeholder = "instructor id";
  const supersedeLabel = document.createElement("label");
  const supersede = document.createElement("input");
  supersede.type = "checkbox";
  supersede.className = "supersede";
  supersedeLabel.append(
    supersede,
    document.createTextNode(" supersede current decision"),
  );
  const buttons: HTMLButtonElement[] = [];
  for (const action of ["Approve", "Personalize", "Override"] as const) {
    const btn = document.createElement("button");
    btn.textContent = action;
    btn.dataset.action = action;
    if (action === "Approve") btn.className = "primary";
    buttons.push(btn);
    actions.append(btn);
  }
  actions.append(actor, supersedeLabel);
  container.append(actions);

  const errorNote = document.createElement("div");
  errorNote.className = "error-note";
  errorNote.hidden = true;
  container.append(errorNote);

  container.append(historyBlock(view));

  const controls = (): (HTMLInputElement | HTMLButtonElement)[] => [
    ...buttons,
    actor,
    supersede,
    ...Array.from(list.querySelectorAll<HTMLInputElement>("input")),
  ];

  for (const btn of buttons) {
    btn.addEventListener("click", async () => {
      const action = btn.dataset.action as DecisionRequest["action"];
      const req: DecisionRequest = {
        action,
        actor: actor.value.trim() || "instructor",
        snapshot: opts.snapshot,
      };
      if (action !== "Approve") {
        req.strategies = Array.from(
          list.querySelectorAll<HTMLInputElement>("input:checked"),
        ).map((b) => b.value);
      }
      if (supersede.checked && FINAL_STATUSES.has(view.status)) {
        req.supersede = true;
      }
      errorNote.hidden = true;
      errorNote.textContent = "";
      for (const c of controls()) c.disabled = true;
      try {
        const resp = await opts.submit(view.plan.planID, req);
        renderPlanPanel(container, fromResponse(resp), opts);
      } catch (err) {
        errorNote.textContent =
          err instanceof Error ? err.message : String(err);
        errorNote.hidden = false;
        for (const c of controls()) c.disabled = false;
      }
    });
  }
}
