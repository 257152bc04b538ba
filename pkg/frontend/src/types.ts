/**
 * Shapes of the JSON payloads the clarify-plan HTTP API emits.
 *
 * These mirror what the server actually sends (see tests/fixtures/ for
 * recorded examples); the UI performs no planning logic of its own and
 * treats every value here as opaque server truth.
 */

export interface QuestionPayload {
  question_id: string;
  text: string;
}

/** One plan step: canonical keys first, then whatever extension keys the model added. */
export type RapStep = Record<string, string>;

export interface RapVersion {
  revision: number;
  steps: RapStep[];
}

export interface MetricsPayload {
  iterations: number;
  question_turns: number;
  questions_total: number;
  tokens_estimated: number;
}

export interface SessionView {
  session_id: string;
  command: string;
  config: Record<string, unknown>;
  phase: string;
  iteration: number;
  status: string | null;
  pending_questions: QuestionPayload[];
  rap_versions: RapVersion[];
  metrics: MetricsPayload;
  last_seq: number;
  error?: string;
}

export interface AnswerEntry {
  question_id: string;
  /** Free text, or the literal REFUSED marker. */
  text: string;
}

export interface AnswerSubmission {
  answers: AnswerEntry[];
}

export interface AnswerAck {
  accepted: boolean;
  duplicate?: boolean;
}

export interface CreatedSession {
  session_id: string;
  config: Record<string, unknown>;
}

export interface AddedStepEntry {
  position: number;
  step: RapStep;
}

export interface ModifiedStepEntry {
  position: number;
  changes: Record<string, [string | null, string | null]>;
}

export interface RapDiffPayload {
  added_steps: AddedStepEntry[];
  removed_steps: AddedStepEntry[];
  modified_steps: ModifiedStepEntry[];
  added_keys: string[];
  removed_keys: string[];
  from?: number;
  to?: number;
}

export interface SessionEventPayload {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
  ts: string;
}

export interface EventPollResult {
  events: SessionEventPayload[];
  finished: boolean;
  status: string | null;
}

/** Marker the API uses for a refused answer inside an AnswerSet. */
export const REFUSED_MARKER = "REFUSED";

/** Phase names as the server spells them. */
export const PHASE_AWAITING = "AwaitAnswers";
export const PHASE_DONE = "Done";
