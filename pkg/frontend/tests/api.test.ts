import { afterEach, describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiError, StaleCriteriaError, newIdempotencyKey } from '../src/api.js';

afterEach(() => vi.unstubAllGlobals());

function makeClient(): ApiClient {
  return new ApiClient({ baseUrl: 'http://stub', projectId: 'p1', annotator: 'a' });
}

const SUBMISSION = {
  post_id: 7,
  label: 'positive' as const,
  criteria_version: 1,
  idempotency_key: 'fixed-key',
};

describe('submitLabel', () => {
  it('retries a transport failure with the same idempotency key', async () => {
    const seenKeys: Array<string | null> = [];
    let calls = 0;
    vi.stubGlobal('fetch', async (_url: string, init?: RequestInit) => {
      seenKeys.push(new Headers(init?.headers).get('Idempotency-Key'));
      calls += 1;
      if (calls === 1) {
        throw new TypeError('connection reset');
      }
      return new Response(
        JSON.stringify({
          accepted: true,
          post_id: 7,
          iteration: 1,
          progress: { labeled: 1, remaining: 9, total: 10 },
        }),
        { status: 200 },
      );
    });

    const response = await makeClient().submitLabel(SUBMISSION);
    expect(response.accepted).toBe(true);
    expect(calls).toBe(2);
    expect(seenKeys).toEqual(['fixed-key', 'fixed-key']);
  });

  it('gives up after exhausting retries and surfaces the failure', async () => {
    vi.stubGlobal('fetch', async () => {
      throw new TypeError('network down');
    });
    await expect(makeClient().submitLabel(SUBMISSION, 1)).rejects.toThrow('network down');
  });

  it('maps the stale-criteria 409 to a typed error', async () => {
    vi.stubGlobal(
      'fetch',
      async () =>
        new Response(JSON.stringify({ detail: { error: 'stale', current_version: 4 } }), {
          status: 409,
        }),
    );
    await expect(makeClient().submitLabel(SUBMISSION)).rejects.toThrowError(StaleCriteriaError);
    try {
      await makeClient().submitLabel(SUBMISSION);
    } catch (failure) {
      expect((failure as StaleCriteriaError).currentVersion).toBe(4);
    }
  });

  it('maps other rejections to ApiError with the status', async () => {
    vi.stubGlobal(
      'fetch',
      async () => new Response(JSON.stringify({ detail: 'not assigned' }), { status: 422 }),
    );
    const failure = await makeClient()
      .submitLabel(SUBMISSION)
      .catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(422);
  });
});

describe('idempotency keys', () => {
  it('generates unique keys', () => {
    const keys = new Set(Array.from({ length: 100 }, () => newIdempotencyKey()));
    expect(keys.size).toBe(100);
  });
});
