import { StudyApi } from "./api.js";
import { clear, el } from "./dom.js";
import { SessionRunner } from "./session.js";

/** Boot screen: subject id + optional age band, then hand over to the
 * session runner. The UI talks to the same origin that served it. */
function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const api = new StudyApi("");

  clear(root);
  const subjectInput = el("input", {
    type: "text",
    id: "subject",
    placeholder: "subject id",
  }) as HTMLInputElement;
  const ageSelect = el("select", { id: "age" }, [
    el("option", { value: "" }, ["age band (optional)"]),
    el("option", { value: "20-30" }, ["20-30"]),
    el("option", { value: "30-50" }, ["30-50"]),
    el("option", { value: "50-60" }, ["50-60"]),
  ]) as HTMLSelectElement;
  const startBtn = el("button", { class: "submit" }, ["Start session"]);
  const error = el("p", { class: "status" });

  startBtn.addEventListener("click", () => {
    const subjectId = subjectInput.value.trim();
    if (!subjectId) {
      error.textContent = "Please enter a subject id.";
      return;
    }
    const meta: Record<string, string> = {};
    if (ageSelect.value) meta.age_band = ageSelect.value;
    const runner = new SessionRunner(root, api);
    runner.start(subjectId, meta).catch((err) => {
      error.textContent = `Session failed: ${err}`;
      root.append(error);
    });
  });

  root.append(
    el("section", { class: "screen" }, [
      el("h1", {}, ["spvkit study"]),
      el("p", {}, ["Operator: enter the subject id to start a new session."]),
      subjectInput,
      ageSelect,
      startBtn,
      error,
    ]),
  );
}

boot();
