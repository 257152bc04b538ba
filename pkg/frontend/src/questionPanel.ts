/**
 * State and markup for the clarifying-question panel.
 *
 * The panel holds one draft per pending question. Submission is only
 * possible once every question carries either a non-empty draft or an
 * explicit refusal — there is no way to post a partial answer set from
 * the UI. When the session moves on while the operator is still typing,
 * the panel is disabled in place with a notice instead of vanishing.
 */

import { REFUSED_MARKER } from "./types.js";
import type { AnswerSubmission, QuestionPayload } from "./types.js";
import { escapeHtml } from "./rapTable.js";

export interface QuestionDraft {
  text: string;
  refused: boolean;
}

export class QuestionPanel {
  readonly questions: readonly QuestionPayload[];
  private readonly drafts: Map<string, QuestionDraft>;
  private notice: string | null = null;

  constructor(questions: readonly QuestionPayload[]) {
    this.questions = [...questions];
    this.drafts = new Map(
      this.questions.map((q) => [q.question_id, { text: "", refused: false }]),
    );
  }

  private draftFor(questionId: string): QuestionDraft {
    const draft = this.drafts.get(questionId);
    if (!draft) throw new Error(`unknown question id: ${questionId}`);
    return draft;
  }

  draft(questionId: string): QuestionDraft {
    return { ...this.draftFor(questionId) };
  }

  setDraft(questionId: string, text: string): void {
    this.draftFor(questionId).text = text;
  }

  setRefused(questionId: string, refused: boolean): void {
    this.draftFor(questionId).refused = refused;
  }

  toggleRefused(questionId: string): boolean {
    const draft = this.draftFor(questionId);
    draft.refused = !draft.refused;
    return draft.refused;
  }

  /** A question counts as answered with a non-empty draft or an explicit refusal. */
  isAnswered(questionId: string): boolean {
    const draft = this.draftFor(questionId);
    return draft.refused || draft.text.trim() !== "";
  }

  isComplete(): boolean {
    return this.questions.every((q) => this.isAnswered(q.question_id));
  }

  get disabled(): boolean {
    return this.notice !== null;
  }

  get disabledNotice(): string | null {
    return this.notice;
  }

  disable(notice: string): void {
    this.notice = notice;
  }

  submitEnabled(): boolean {
    return !this.disabled && this.questions.length > 0 && this.isComplete();
  }

  /** Build the answer set the API expects; refusals post the literal marker. */
  submission(): AnswerSubmission {
    if (!this.submitEnabled()) {
      throw new Error("cannot submit: panel is disabled or incomplete");
    }
    return {
      answers: this.questions.map((q) => {
        const draft = this.draftFor(q.question_id);
        return {
          question_id: q.question_id,
          text: draft.refused ? REFUSED_MARKER : draft.text.trim(),
        };
      }),
    };
  }

  render(): string {
    const rows = this.questions
      .map((q) => {
        const draft = this.draftFor(q.question_id);
        const refusedClass = draft.refused ? " refused" : "";
        return [
          `<li class="question${refusedClass}" data-question-id="${escapeHtml(q.question_id)}">`,
          `<label for="answer-${escapeHtml(q.question_id)}">${escapeHtml(q.text)}</label>`,
          `<textarea id="answer-${escapeHtml(q.question_id)}" data-answer-for="${escapeHtml(q.question_id)}"` +
            `${this.disabled || draft.refused ? " disabled" : ""}>${escapeHtml(draft.text)}</textarea>`,
          `<button type="button" data-refuse-for="${escapeHtml(q.question_id)}"` +
            `${this.disabled ? " disabled" : ""} aria-pressed="${draft.refused}">` +
            `${draft.refused ? "Refused" : "Refuse to answer"}</button>`,
          "</li>",
        ].join("");
      })
      .join("\n");
    const noticeHtml = this.notice
      ? `<p class="panel-notice" role="status">${escapeHtml(this.notice)}</p>`
      : "";
    const submitDisabled = this.submitEnabled() ? "" : " disabled";
    return [
      `<fieldset class="question-panel"${this.disabled ? " disabled" : ""}>`,
      noticeHtml,
      `<ol class="question-list">`,
      rows,
      "</ol>",
      `<button type="button" data-submit-answers${submitDisabled}>Send answers</button>`,
      "</fieldset>",
    ]
      .filter((part) => part !== "")
      .join("\n");
  }
}
