import { describe, expect, it } from "vitest";

import { ClarifyPlanApi, ApiError } from "../src/api.js";
import { SessionModel } from "../src/model.js";
import { QuestionPanel } from "../src/questionPanel.js";
import { REFUSED_MARKER } from "../src/types.js";
import type { AnswerAck, SessionView } from "../src/types.js";
import { fakeFetch, fixture } from "./helpers.js";

const awaiting = () => fixture<SessionView>("view_awaiting.json");
const done = () => fixture<SessionView>("view_done.json");
const truncated = () => fixture<SessionView>("view_truncated.json");

describe("question panel rendering", () => {
  it("renders every pending question from the recorded view", () => {
    const view = awaiting();
    const panel = new QuestionPanel(view.pending_questions);
    const html = panel.render();
    expect(view.pending_questions).toHaveLength(3);
    for (const q of view.pending_questions) {
      expect(html).toContain(`data-question-id="${q.question_id}"`);
      expect(html).toContain(q.text);
      expect(html).toContain(`data-answer-for="${q.question_id}"`);
      expect(html).toContain(`data-refuse-for="${q.question_id}"`);
    }
  });

  it("escapes markup in question text", () => {
    const panel = new QuestionPanel([
      { question_id: "q1", text: 'Use <b>bold</b> & "quotes"?' },
    ]);
    const html = panel.render();
    expect(html).toContain("Use &lt;b&gt;bold&lt;/b&gt; &amp; &quot;quotes&quot;?");
    expect(html).not.toContain("<b>bold</b>");
  });

  it("marks the submit button disabled until the panel is complete", () => {
    const panel = new QuestionPanel(awaiting().pending_questions);
    expect(panel.render()).toContain("data-submit-answers disabled");
    panel.setDraft("q1", "In the refrigerator.");
    panel.setDraft("q2", "About 3 minutes.");
    panel.setDraft("q3", "On a plate.");
    expect(panel.render()).toContain("data-submit-answers>");
    expect(panel.render()).not.toContain("data-submit-answers disabled");
  });
});

describe("submit gating", () => {
  it("blocks submit until every question has a non-empty draft or a refusal", () => {
    const panel = new QuestionPanel(awaiting().pending_questions);
    expect(panel.submitEnabled()).toBe(false);

    panel.setDraft("q1", "In the refrigerator.");
    expect(panel.submitEnabled()).toBe(false);

    // Whitespace is not an answer.
    panel.setDraft("q2", "   \t");
    expect(panel.submitEnabled()).toBe(false);

    panel.setRefused("q2", true);
    expect(panel.submitEnabled()).toBe(false);

    panel.setDraft("q3", "Put it on a plate.");
    expect(panel.submitEnabled()).toBe(true);

    // Un-refusing q2 reopens the gap.
    panel.setRefused("q2", false);
    expect(panel.submitEnabled()).toBe(false);
  });

  it("throws instead of building a partial answer set", () => {
    const panel = new QuestionPanel(awaiting().pending_questions);
    panel.setDraft("q1", "Somewhere.");
    expect(() => panel.submission()).toThrowError(/disabled or incomplete/);
  });

  it("rejects drafts for unknown question ids", () => {
    const panel = new QuestionPanel(awaiting().pending_questions);
    expect(() => panel.setDraft("q9", "nope")).toThrowError(/unknown question id/);
    expect(() => panel.setRefused("q9", true)).toThrowError(/unknown question id/);
  });

  it("never enables submit on an empty question list", () => {
    const panel = new QuestionPanel([]);
    expect(panel.isComplete()).toBe(true);
    expect(panel.submitEnabled()).toBe(false);
  });
});

describe("answer submission payload", () => {
  it("builds a well-formed answer set including REFUSED entries", () => {
    const panel = new QuestionPanel(awaiting().pending_questions);
    panel.setDraft("q1", "  In the refrigerator.  ");
    panel.setRefused("q2", true);
    panel.setDraft("q2", "typed before refusing"); // refusal wins
    panel.setDraft("q3", "Put it on a plate.");
    expect(panel.submission()).toEqual({
      answers: [
        { question_id: "q1", text: "In the refrigerator." },
        { question_id: "q2", text: REFUSED_MARKER },
        { question_id: "q3", text: "Put it on a plate." },
      ],
    });
  });

  it("posts the answer set through the API in the recorded wire shape", async () => {
    const panel = new QuestionPanel(awaiting().pending_questions);
    panel.setDraft("q1", "In the refrigerator.");
    panel.setRefused("q2", true);
    panel.setDraft("q3", "Put it on a plate.");

    const { impl, calls } = fakeFetch([fixture("answers_accepted.json")]);
    const api = new ClarifyPlanApi("http://api.test", impl);
    const ack = await api.postAnswers("ui-fixture-egg", panel.submission());

    expect(ack).toEqual<AnswerAck>({ accepted: true });
    expect(calls).toHaveLength(1);
    expect(calls[0]!.url).toBe("http://api.test/sessions/ui-fixture-egg/answers");
    expect(calls[0]!.method).toBe("POST");
    expect(calls[0]!.headers["content-type"]).toBe("application/json");
    expect(calls[0]!.body).toEqual({
      answers: [
        { question_id: "q1", text: "In the refrigerator." },
        { question_id: "q2", text: "REFUSED" },
        { question_id: "q3", text: "Put it on a plate." },
      ],
    });
  });

  it("surfaces the recorded conflict response as an ApiError", async () => {
    const panel = new QuestionPanel(awaiting().pending_questions);
    for (const q of awaiting().pending_questions) panel.setRefused(q.question_id, true);

    const { impl } = fakeFetch([fixture("answers_conflict.json")]);
    const api = new ClarifyPlanApi("http://api.test", impl);
    const failure = await api
      .postAnswers("ui-fixture-egg", panel.submission())
      .then(() => null)
      .catch((error: unknown) => error);

    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(409);
    expect((failure as ApiError).detail).toBe("session is not awaiting answers");
  });
});

describe("phase changes while typing", () => {
  it("disables the panel with a notice when the session finishes", () => {
    const model = new SessionModel(awaiting());
    model.panel!.setDraft("q1", "half-typed answ");
    model.applyView(done());

    expect(model.panel).not.toBeNull();
    expect(model.panel!.disabled).toBe(true);
    expect(model.panel!.disabledNotice).toMatch(/Done/);
    expect(model.submitEnabled()).toBe(false);

    const html = model.panel!.render();
    expect(html).toContain('<fieldset class="question-panel" disabled>');
    expect(html).toContain("panel-notice");
    expect(html).toContain("no longer accept answers");
    // The half-typed draft stays visible so nothing silently vanishes.
    expect(html).toContain("half-typed answ");
  });

  it("mentions truncation when the session was cut off", () => {
    const model = new SessionModel(awaiting());
    model.applyView(truncated());
    expect(model.panel!.disabled).toBe(true);
    expect(model.panel!.disabledNotice).toMatch(/Truncated/);
  });

  it("keeps drafts across a refresh that repeats the same question batch", () => {
    const model = new SessionModel(awaiting());
    model.panel!.setDraft("q1", "still typing");
    model.applyView(awaiting());
    expect(model.panel!.draft("q1").text).toBe("still typing");
  });
});
