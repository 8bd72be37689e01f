/**
 * Payload shapes of the workbench HTTP API, as consumed by the UI.
 * Every number the UI renders comes out of one of these responses.
 */

export type Label = 'positive' | 'negative';

export interface ProjectInfo {
  id: string;
  name: string;
  current_iteration: number;
  iteration_status: 'open' | 'complete';
  criteria_version: number;
  labeled_posts: number;
  corpus: { total: number; questions: number; answers: number } | null;
}

export interface IterationView {
  index: number;
  status: 'open' | 'complete';
  closed: boolean;
  batch: number[];
  assignments: Record<string, number[]>;
  overlap_fraction: number;
  progress: Record<string, Progress> | null;
}

export interface Progress {
  labeled: number;
  remaining: number;
  total: number;
}

export interface BatchPost {
  position: number;
  post_id: number;
  kind: 'question' | 'answer';
  tags: string[];
  body_html: string;
  body_text: string;
  label: Label | null;
  certainty: number | null;
  rationale: string | null;
}

export interface BatchResponse {
  iteration: number;
  annotator: string;
  posts: BatchPost[];
}

export interface LabelSubmission {
  post_id: number;
  label: Label;
  criteria_version: number;
  certainty?: number | null;
  rationale?: string | null;
  idempotency_key: string;
}

export interface SubmitResponse {
  accepted: boolean;
  post_id: number;
  iteration: number;
  progress: Progress;
}

export interface CriteriaVersion {
  version: number;
  text: string;
  changelog: string;
  created_at: string;
}

export interface CriteriaResponse {
  current_version: number;
  versions: CriteriaVersion[];
}

export interface AgreementReport {
  scope: string;
  alpha: number | null;
  alpha_display: number | null;
  alpha_undefined: boolean;
  percent_agreement: number;
  pairable_units: number;
  total_units: number;
  label_marginals: Record<string, number>;
}

export interface LearningCurveRow {
  iteration: number;
  view: string;
  accuracy: string;
  precision: string;
  recall: string;
  f1: string;
}

export interface DistanceRow {
  post_id: string;
  set: 'labeled' | 'unlabeled';
  distance: number;
  quadrant: 'TP' | 'FP' | 'TN' | 'FN' | 'none';
}

export interface DistanceSummary {
  pos_count: number;
  neg_count: number;
  quadrants: Record<string, number>;
  quadrant_mode: string;
  bin_width: number;
  bins: Record<string, Array<[number, number, number]>>;
}

export interface DistancesResponse {
  iteration: number;
  view: string;
  summary: DistanceSummary;
  rows: Array<Record<string, string>>;
}

export interface JobStatus {
  id: string;
  kind: string;
  project_id: string;
  state: 'queued' | 'running' | 'done' | 'failed';
  result: unknown;
  error: string | null;
}

/** 409 payload for a stale criteria_version. */
export interface StaleCriteriaDetail {
  error: string;
  current_version: number;
}
