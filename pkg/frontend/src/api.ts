/**
 * Typed client for the workbench HTTP API.
 *
 * Only the documented endpoints are used. Label submission carries an
 * idempotency key; a network failure retries the SAME key, so a request
 * that actually reached the journal is never duplicated.
 */

import type {
  AgreementReport,
  BatchResponse,
  CriteriaResponse,
  DistancesResponse,
  IterationView,
  JobStatus,
  LabelSubmission,
  ProjectInfo,
  StaleCriteriaDetail,
  SubmitResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`HTTP ${status}: ${JSON.stringify(detail)}`);
  }
}

export class StaleCriteriaError extends Error {
  constructor(public currentVersion: number) {
    super(`criteria version is stale; current is ${currentVersion}`);
  }
}

export function newIdempotencyKey(): string {
  const rng = globalThis.crypto;
  if (rng && 'randomUUID' in rng) {
    return rng.randomUUID();
  }
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

export interface ApiConfig {
  baseUrl: string;
  projectId: string;
  annotator: string;
}

export class ApiClient {
  constructor(private config: ApiConfig) {}

  get annotator(): string {
    return this.config.annotator;
  }

  private url(path: string): string {
    return `${this.config.baseUrl}/projects/${this.config.projectId}${path}`;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.url(path));
    if (!response.ok) {
      throw new ApiError(response.status, await safeDetail(response));
    }
    return (await response.json()) as T;
  }

  project(): Promise<ProjectInfo> {
    return this.getJson<ProjectInfo>('');
  }

  currentIteration(): Promise<IterationView> {
    return this.getJson<IterationView>('/iterations/current');
  }

  batch(iteration: number, annotator: string): Promise<BatchResponse> {
    return this.getJson<BatchResponse>(
      `/iterations/${iteration}/batch?annotator=${encodeURIComponent(annotator)}`,
    );
  }

  criteria(): Promise<CriteriaResponse> {
    return this.getJson<CriteriaResponse>('/criteria');
  }

  agreement(scope: 'overlap' | 'design'): Promise<AgreementReport> {
    return this.getJson<AgreementReport>(`/agreement?scope=${scope}`);
  }

  async learningCurveCsv(): Promise<string> {
    const response = await fetch(this.url('/metrics/learning-curve'));
    if (!response.ok) {
      throw new ApiError(response.status, await safeDetail(response));
    }
    return response.text();
  }

  distances(view?: string): Promise<DistancesResponse> {
    const query = view ? `&view=${encodeURIComponent(view)}` : '';
    return this.getJson<DistancesResponse>(`/distances?format=json${query}`);
  }

  async jobStatus(jobId: string): Promise<JobStatus> {
    const response = await fetch(`${this.config.baseUrl}/jobs/${jobId}`);
    if (!response.ok) {
      throw new ApiError(response.status, await safeDetail(response));
    }
    return (await response.json()) as JobStatus;
  }

  /**
   * Submit one label. Retries transport failures with the same key up to
   * `retries` times; maps the stale-criteria 409 to StaleCriteriaError.
   */
  async submitLabel(submission: LabelSubmission, retries = 2): Promise<SubmitResponse> {
    let lastFailure: unknown = null;
    for (let attempt = 0; attempt <= retries; attempt += 1) {
      let response: Response;
      try {
        response = await fetch(this.url('/labels'), {
          method: 'POST',
          headers: {
            'Content-Type': 'application/json',
            'X-Annotator': this.config.annotator,
            'Idempotency-Key': submission.idempotency_key,
          },
          body: JSON.stringify(submission),
        });
      } catch (failure) {
        lastFailure = failure; // network error: retry with the same key
        continue;
      }
      if (response.ok) {
        return (await response.json()) as SubmitResponse;
      }
      const detail = await safeDetail(response);
      if (response.status === 409 && isStaleCriteria(detail)) {
        throw new StaleCriteriaError(detail.current_version);
      }
      throw new ApiError(response.status, detail);
    }
    throw lastFailure instanceof Error ? lastFailure : new Error(String(lastFailure));
  }
}

function isStaleCriteria(detail: unknown): detail is StaleCriteriaDetail {
  return (
    typeof detail === 'object' &&
    detail !== null &&
    'current_version' in detail &&
    typeof (detail as StaleCriteriaDetail).current_version === 'number'
  );
}

async function safeDetail(response: Response): Promise<unknown> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return body.detail ?? body;
  } catch {
    return response.statusText;
  }
}
