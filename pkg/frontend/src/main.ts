// Entry point: ?annotator=<id>&class=<id> selects the session; the service
// is assumed same-origin (run `naming-lab serve --ui-dir frontend/dist`).

import { FetchTransport, NamingApi } from "./api.js";
import { NamingView } from "./ui.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new NamingApi(new FetchTransport(""));
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  const annotator = params.get("annotator");
  const classId = params.get("class");
  if (!annotator || !classId) {
    root.textContent = "";
    const form = document.createElement("form");
    form.className = "session-picker";
    const annotatorInput = document.createElement("input");
    annotatorInput.placeholder = "annotator id";
    annotatorInput.name = "annotator";
    const select = document.createElement("select");
    select.name = "class";
    try {
      for (const category of await api.categories()) {
        const option = document.createElement("option");
        option.value = category.class_id;
        option.textContent =
          `${category.class_id} (${category.significant_total} activations, ` +
          `${category.image_count} images)`;
        select.appendChild(option);
      }
    } catch (error) {
      root.textContent = `cannot reach the naming service: ${String(error)}`;
      return;
    }
    const go = document.createElement("button");
    go.textContent = "start naming";
    form.append(annotatorInput, select, go);
    root.appendChild(form);
    return;
  }

  const view = new NamingView(root, { api, annotatorId: annotator, classId });
  await view.start();
}

void boot();
