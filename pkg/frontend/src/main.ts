// App shell: snapshot picker, token entry, cohort/student routing, and a
// polling refresh loop. All data arrives via /v1 fetches; nothing is
// computed client side.

import { fetchSnapshots, setToken } from "./api";
import { showBanner } from "./banners";
import { fetchCohortView } from "./cohort";
import { fetchStudentView } from "./student";

const POLL_MS = 30_000;

interface AppState {
  snapshot: string | null;
  view: { kind: "cohort" } | { kind: "student"; studentId: string };
}

function buildTopbar(
  onSnapshot: (id: string) => void,
  onRefresh: () => void,
): { bar: HTMLElement; select: HTMLSelectElement } {
  const bar = document.createElement("div");
  bar.className = "topbar";

  const title = document.createElement("strong");
  title.textContent = "Quiz engagement dashboard";

  const select = document.createElement("select");
  select.className = "snapshot-select";
  select.addEventListener("change", () => onSnapshot(select.value));

  const token = document.createElement("input");
  token.type = "password";
  token.placeholder = "API token (optional)";
  token.className = "token-input";
  token.addEventListener("change", () => {
    setToken(token.value.trim());
    onRefresh();
  });

  const refresh = document.createElement("button");
  refresh.textContent = "Refresh";
  refresh.addEventListener("click", onRefresh);

  bar.append(title, select, token, refresh);
  return { bar, select };
}

export function startApp(root: HTMLElement): void {
  const state: AppState = { snapshot: null, view: { kind: "cohort" } };

  const content = document.createElement("div");
  content.className = "content";

  const render = () => {
    if (!state.snapshot) {
      content.replaceChildren();
      const p = document.createElement("p");
      p.className = "empty-state";
      p.textContent = "No snapshots available. Run the pipeline first.";
      content.append(p);
      return;
    }
    if (state.view.kind === "student") {
      void fetchStudentView(content, state.view.studentId, state.snapshot, {
        onBack: () => {
          state.view = { kind: "cohort" };
          render();
        },
      });
    } else {
      void fetchCohortView(content, state.snapshot, (entry) => {
        if (!entry.studentID) return;
        state.view = { kind: "student", studentId: entry.studentID };
        render();
      });
    }
  };

  const { bar, select } = buildTopbar(
    (id) => {
      state.snapshot = id;
      state.view = { kind: "cohort" };
      render();
    },
    () => void refreshSnapshots(),
  );
  root.replaceChildren(bar, content);

  const refreshSnapshots = async () => {
    try {
      const payload = await fetchSnapshots();
      const ids = payload.snapshots;
      select.replaceChildren();
      for (const id of ids) {
        const opt = document.createElement("option");
        opt.value = id;
        opt.textContent = id;
        select.append(opt);
      }
      if (ids.length === 0) {
        state.snapshot = null;
      } else if (!state.snapshot || !ids.includes(state.snapshot)) {
        state.snapshot = ids[0];
      }
      if (state.snapshot) select.value = state.snapshot;
      render();
    } catch (err) {
      content.replaceChildren();
      showBanner(
        content,
        err instanceof Error ? err.message : "failed to list snapshots",
      );
    }
  };

  void refreshSnapshots();
  window.setInterval(() => {
    // Poll: re-render the current view from fresh server data.
    if (state.snapshot) render();
  }, POLL_MS);
}

const mount = document.getElementById("app");
if (mount) startApp(mount);
