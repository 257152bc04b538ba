/**
 * Browser entry point: wires the modules to the DOM.
 *
 * Everything in here is plumbing — real behaviour lives in the imported
 * modules, which is where the tests point. Served at /ui when the API
 * process is started with --serve-ui.
 */

import { ClarifyPlanApi, ApiError } from "./api.js";
import { EventFeed } from "./events.js";
import { SessionModel } from "./model.js";
import { renderRapTable, escapeHtml } from "./rapTable.js";
import { renderDiffView } from "./diffView.js";

const api = new ClarifyPlanApi("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const commandForm = el<HTMLFormElement>("command-form");
const commandInput = el<HTMLInputElement>("command-input");
const statusLine = el<HTMLElement>("status-line");
const errorBanner = el<HTMLElement>("error-banner");
const questionMount = el<HTMLElement>("question-panel");
const rapMount = el<HTMLElement>("rap-table");
const diffMount = el<HTMLElement>("diff-view");
const metricsLine = el<HTMLElement>("metrics-line");

let model: SessionModel | null = null;
let feed: EventFeed | null = null;

function showError(message: string): void {
  errorBanner.textContent = message;
  errorBanner.hidden = false;
}

function clearError(): void {
  errorBanner.hidden = true;
  errorBanner.textContent = "";
}

function describeStatus(): string {
  if (!model) return "No session.";
  const { phase, iteration, status } = model.view;
  if (status) return `Session ${model.view.session_id}: ${status}.`;
  return `Session ${model.view.session_id}: iteration ${iteration}, ${phase}.`;
}

function renderMetrics(): void {
  if (!model) {
    metricsLine.textContent = "";
    return;
  }
  const m = model.view.metrics;
  metricsLine.textContent =
    `iterations ${m.iterations} · question turns ${m.question_turns} · ` +
    `questions ${m.questions_total} · ~${m.tokens_estimated} prompt tokens`;
}

function renderQuestions(): void {
  if (!model || !model.panel) {
    questionMount.innerHTML = `<p class="panel-idle">No questions pending.</p>`;
    return;
  }
  questionMount.innerHTML = model.panel.render();
  for (const area of questionMount.querySelectorAll<HTMLTextAreaElement>(
    "textarea[data-answer-for]",
  )) {
    area.addEventListener("input", () => {
      model?.panel?.setDraft(area.dataset.answerFor!, area.value);
      syncSubmitButton();
    });
  }
  for (const button of questionMount.querySelectorAll<HTMLButtonElement>(
    "button[data-refuse-for]",
  )) {
    button.addEventListener("click", () => {
      model?.panel?.toggleRefused(button.dataset.refuseFor!);
      renderQuestions();
    });
  }
  const submit = questionMount.querySelector<HTMLButtonElement>(
    "button[data-submit-answers]",
  );
  submit?.addEventListener("click", () => void submitAnswers());
  syncSubmitButton();
}

function syncSubmitButton(): void {
  const submit = questionMount.querySelector<HTMLButtonElement>(
    "button[data-submit-answers]",
  );
  if (submit && model) submit.disabled = !model.submitEnabled();
}

function renderRap(): void {
  if (!model || model.view.rap_versions.length === 0) {
    rapMount.innerHTML = `<p class="rap-empty">No plan yet.</p>`;
    return;
  }
  const latest = model.view.rap_versions[model.view.rap_versions.length - 1]!;
  rapMount.innerHTML =
    `<h3>Plan revision ${latest.revision}</h3>` + renderRapTable(latest.steps);
}

async function renderDiff(): Promise<void> {
  if (!model) return;
  const range = model.defaultDiffRange();
  if (!range) {
    diffMount.innerHTML = "";
    return;
  }
  try {
    const diff = await api.getDiff(model.view.session_id, range.from, range.to);
    const steps = model.stepsForRevision(range.to) ?? [];
    diffMount.innerHTML =
      `<h3>What changed</h3>` + renderDiffView(diff, steps);
  } catch (error) {
    showError(error instanceof ApiError ? `diff failed: ${error.status}` : String(error));
  }
}

async function refreshView(): Promise<void> {
  if (!model) return;
  const view = await api.getSession(model.view.session_id);
  model.applyView(view);
  statusLine.textContent = describeStatus();
  renderMetrics();
  renderQuestions();
  renderRap();
  await renderDiff();
}

async function submitAnswers(): Promise<void> {
  if (!model || !model.panel || !model.submitEnabled()) return;
  clearError();
  try {
    await api.postAnswers(model.view.session_id, model.panel.submission());
  } catch (error) {
    if (error instanceof ApiError) {
      showError(`answers rejected (${error.status}): ${JSON.stringify(error.detail)}`);
      await refreshView();
      return;
    }
    throw error;
  }
  await refreshView();
}

function watchSession(sessionId: string): void {
  feed?.stop();
  feed = new EventFeed(api, sessionId);
  feed.start({
    onEvent: () => void refreshView(),
    onFinished: () => void refreshView(),
    onError: (error) => showError(`event stream hiccup: ${String(error)}`),
  });
}

commandForm.addEventListener("submit", (ev) => {
  ev.preventDefault();
  void (async () => {
    const command = commandInput.value.trim();
    if (!command) return;
    clearError();
    statusLine.textContent = "Starting session…";
    try {
      const created = await api.createSession(command);
      model = new SessionModel(await api.getSession(created.session_id));
      watchSession(created.session_id);
      await refreshView();
    } catch (error) {
      if (error instanceof ApiError && error.status === 503) {
        showError("The server has no backend configured; start it with a model backend.");
      } else {
        showError(escapeHtml(String(error)));
      }
      statusLine.textContent = "No session.";
    }
  })();
});
